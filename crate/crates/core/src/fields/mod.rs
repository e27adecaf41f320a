//! Multi-species densities on a uniform cell-centred grid.

mod frame;
mod interp;
mod io;

pub use frame::{from_rescaled, to_rescaled, FrameTransform};
pub use interp::Interpolation;
pub(crate) use interp::{axis_taps, Taps};
pub use io::{snapshot_file_name, write_snapshot};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Vacuum outside the domain.
    Outflow,
}

/// Direction along which a line integral runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
    pub boundary: Boundary,
}

impl Domain {
    pub fn new(
        (xmin, xmax): (f64, f64),
        (ymin, ymax): (f64, f64),
        nx: usize,
        ny: usize,
        boundary: Boundary,
    ) -> Result<Self> {
        if !(xmin.is_finite() && xmax.is_finite() && ymin.is_finite() && ymax.is_finite()) {
            return Err(Error::InvalidDomain("bounds must be finite".into()));
        }
        if xmax <= xmin || ymax <= ymin {
            return Err(Error::InvalidDomain(format!(
                "empty extent [{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidDomain(format!(
                "grid {nx}x{ny} is smaller than 4x4"
            )));
        }
        Ok(Self {
            xmin,
            xmax,
            ymin,
            ymax,
            nx,
            ny,
            boundary,
        })
    }

    /// The square `[-half, half]^2` with `n x n` cells.
    pub fn square(half: f64, n: usize, boundary: Boundary) -> Result<Self> {
        Self::new((-half, half), (-half, half), n, n, boundary)
    }

    pub fn hx(&self) -> f64 {
        (self.xmax - self.xmin) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.ymax - self.ymin) / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.xmin + (ix as f64 + 0.5) * self.hx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.ymin + (iy as f64 + 0.5) * self.hy()
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Row whose centre is closest to `y` (clamped to the grid).
    pub fn nearest_row(&self, y: f64) -> usize {
        nearest_index(y, self.ymin, self.hy(), self.ny)
    }

    pub fn nearest_col(&self, x: f64) -> usize {
        nearest_index(x, self.xmin, self.hx(), self.nx)
    }

    /// Rows whose centres lie in `[lo, hi]`.
    pub fn rows_within(&self, lo: f64, hi: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.ny).filter(move |&iy| {
            let y = self.y(iy);
            y >= lo && y <= hi
        })
    }

    pub fn cols_within(&self, lo: f64, hi: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.nx).filter(move |&ix| {
            let x = self.x(ix);
            x >= lo && x <= hi
        })
    }

    /// Cell indices overlapping `[lo, hi]` along one axis, with the overlap
    /// midpoint and length.
    fn overlaps(
        min: f64,
        h: f64,
        n: usize,
        lo: f64,
        hi: f64,
    ) -> impl Iterator<Item = (usize, f64, f64)> {
        let max = min + h * n as f64;
        let (lo, hi) = (lo.max(min), hi.min(max));
        let first = if hi > lo {
            ((lo - min) / h).floor().max(0.0) as usize
        } else {
            n
        };
        let last = if hi > lo {
            (((hi - min) / h).ceil() as usize).min(n)
        } else {
            n
        };
        (first..last).filter_map(move |i| {
            let a = (min + i as f64 * h).max(lo);
            let b = (min + (i + 1) as f64 * h).min(hi);
            (b > a).then_some((i, 0.5 * (a + b), b - a))
        })
    }

    pub(crate) fn x_overlaps(&self, lo: f64, hi: f64) -> impl Iterator<Item = (usize, f64, f64)> {
        Self::overlaps(self.xmin, self.hx(), self.nx, lo, hi)
    }

    pub(crate) fn y_overlaps(&self, lo: f64, hi: f64) -> impl Iterator<Item = (usize, f64, f64)> {
        Self::overlaps(self.ymin, self.hy(), self.ny, lo, hi)
    }
}

fn nearest_index(p: f64, min: f64, h: f64, n: usize) -> usize {
    let s = ((p - min) / h - 0.5).round();
    s.clamp(0.0, (n - 1) as f64) as usize
}

/// Largest stored density, with its location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorm {
    pub value: f64,
    pub species: usize,
    pub ix: usize,
    pub iy: usize,
    pub location: [f64; 2],
    /// Set when the field holds non-finite values; `value` is then infinite.
    pub infinite: bool,
}

/// `N` non-negative densities per cell, stored interleaved:
/// `data[(iy * nx + ix) * N + s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    domain: Domain,
    nspecies: usize,
    data: Vec<f64>,
    pub time: f64,
    clamped_mass: f64,
    diverged: bool,
}

impl Field {
    pub fn zeros(domain: Domain, nspecies: usize) -> Self {
        Self {
            domain,
            nspecies,
            data: vec![0.0; domain.cells() * nspecies],
            time: 0.0,
            clamped_mass: 0.0,
            diverged: false,
        }
    }

    /// Samples `f(species, x, y)` at cell centres.
    pub fn from_fn(domain: Domain, nspecies: usize, f: impl Fn(usize, f64, f64) -> f64) -> Self {
        let mut field = Self::zeros(domain, nspecies);
        for iy in 0..domain.ny {
            for ix in 0..domain.nx {
                for s in 0..nspecies {
                    field.set(s, ix, iy, f(s, domain.x(ix), domain.y(iy)));
                }
            }
        }
        field
    }

    pub fn uniform(domain: Domain, values: &[f64]) -> Self {
        Self::from_fn(domain, values.len(), |s, _, _| values[s])
    }

    pub fn from_data(domain: Domain, nspecies: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != domain.cells() * nspecies {
            return Err(Error::DimensionMismatch {
                expected: domain.cells() * nspecies,
                got: data.len(),
            });
        }
        let mut field = Self::zeros(domain, nspecies);
        field.data = data;
        field.diverged = field.data.iter().any(|v| !v.is_finite());
        Ok(field)
    }

    /// Per-cell independent uniform values in `[0, amplitude]`, followed by
    /// `smoothing_passes` rounds of 3x3 averaging. Same seed, same field.
    pub fn random_smoothed(
        domain: Domain,
        nspecies: usize,
        amplitude: f64,
        seed: u64,
        smoothing_passes: usize,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..domain.cells() * nspecies)
            .map(|_| amplitude * rng.random::<f64>())
            .collect();
        let mut field = Self::from_data(domain, nspecies, data).expect("sizes agree");
        for _ in 0..smoothing_passes {
            field.smooth_3x3();
        }
        field
    }

    /// One pass of 3x3 box averaging. Periodic domains wrap; outflow domains
    /// average over the neighbours that exist.
    pub fn smooth_3x3(&mut self) {
        let Domain {
            nx, ny, boundary, ..
        } = self.domain;
        let n = self.nspecies;
        let src = self.data.clone();
        self.data
            .par_chunks_mut(nx * n)
            .enumerate()
            .for_each(|(iy, row)| {
                for ix in 0..nx {
                    for s in 0..n {
                        let (mut acc, mut count) = (0.0, 0.0);
                        for dy in -1i64..=1 {
                            for dx in -1i64..=1 {
                                let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                                let (jx, jy) = match boundary {
                                    Boundary::Periodic => {
                                        (jx.rem_euclid(nx as i64), jy.rem_euclid(ny as i64))
                                    }
                                    Boundary::Outflow => {
                                        if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                                            continue;
                                        }
                                        (jx, jy)
                                    }
                                };
                                acc += src[(jy as usize * nx + jx as usize) * n + s];
                                count += 1.0;
                            }
                        }
                        row[ix * n + s] = acc / count;
                    }
                }
            });
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn nspecies(&self) -> usize {
        self.nspecies
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, s: usize, ix: usize, iy: usize) -> usize {
        (iy * self.domain.nx + ix) * self.nspecies + s
    }

    #[inline]
    pub fn get(&self, s: usize, ix: usize, iy: usize) -> f64 {
        self.data[self.index(s, ix, iy)]
    }

    #[inline]
    pub fn set(&mut self, s: usize, ix: usize, iy: usize, v: f64) {
        let i = self.index(s, ix, iy);
        self.data[i] = v;
    }

    /// Densities of all species in one cell.
    pub fn cell(&self, ix: usize, iy: usize) -> &[f64] {
        let start = (iy * self.domain.nx + ix) * self.nspecies;
        &self.data[start..start + self.nspecies]
    }

    /// Total mass removed by clamping negative values to zero so far.
    pub fn clamped_mass(&self) -> f64 {
        self.clamped_mass
    }

    pub fn is_diverged(&self) -> bool {
        self.diverged
    }

    /// Clamps negative entries to zero (accumulating the removed mass) and
    /// flags the field as diverged if any entry is non-finite.
    pub fn sanitize(&mut self) {
        let area = self.domain.cell_area();
        let (neg, bad) = self
            .data
            .par_chunks_mut(self.domain.nx * self.nspecies)
            .map(|row| {
                let (mut neg, mut bad) = (0.0, false);
                for v in row.iter_mut() {
                    if !v.is_finite() {
                        bad = true;
                    } else if *v < 0.0 {
                        neg -= *v;
                        *v = 0.0;
                    }
                }
                (neg, bad)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, false), |(a, b), (n, x)| (a + n, b || x));
        self.clamped_mass += neg * area;
        self.diverged |= bad;
    }

    pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            domain: self.domain,
            nspecies: self.nspecies,
            data,
            time: self.time,
            clamped_mass: self.clamped_mass,
            diverged: self.diverged,
        }
    }

    pub fn sup_norm(&self) -> SupNorm {
        let mut best = SupNorm {
            value: 0.0,
            species: 0,
            ix: 0,
            iy: 0,
            location: [self.domain.x(0), self.domain.y(0)],
            infinite: false,
        };
        for (i, &v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                let cell = i / self.nspecies;
                let (ix, iy) = (cell % self.domain.nx, cell / self.domain.nx);
                return SupNorm {
                    value: f64::INFINITY,
                    species: i % self.nspecies,
                    ix,
                    iy,
                    location: [self.domain.x(ix), self.domain.y(iy)],
                    infinite: true,
                };
            }
            if v > best.value {
                let cell = i / self.nspecies;
                let (ix, iy) = (cell % self.domain.nx, cell / self.domain.nx);
                best = SupNorm {
                    value: v,
                    species: i % self.nspecies,
                    ix,
                    iy,
                    location: [self.domain.x(ix), self.domain.y(iy)],
                    infinite: false,
                };
            }
        }
        best
    }

    /// Largest absolute difference against another field on the same grid.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn interpolate(&self, species: usize, point: [f64; 2]) -> f64 {
        self.interpolate_with(species, point, Interpolation::Bilinear)
    }

    /// Point evaluation. Outside a non-periodic domain the density is zero.
    pub fn interpolate_with(&self, species: usize, point: [f64; 2], method: Interpolation) -> f64 {
        let d = &self.domain;
        let tx = axis_taps(point[0], d.xmin, d.hx(), d.nx, d.boundary, method);
        let ty = axis_taps(point[1], d.ymin, d.hy(), d.ny, d.boundary, method);
        let mut v = 0.0;
        for (jy, wy) in ty.iter() {
            let mut row = 0.0;
            for (jx, wx) in tx.iter() {
                row += wx * self.get(species, jx, jy);
            }
            v += wy * row;
        }
        if method == Interpolation::Cubic {
            v.max(0.0)
        } else {
            v
        }
    }

    /// Midpoint-rule integral of `weight(pos) * value` along the grid line
    /// nearest to `coord`, over `[lo, hi]`. Cells cut by the segment ends
    /// contribute their overlap length.
    pub fn weighted_line_integral(
        &self,
        species: usize,
        axis: Axis,
        coord: f64,
        lo: f64,
        hi: f64,
        weight: impl Fn(f64) -> f64,
    ) -> f64 {
        match axis {
            Axis::X => self.row_integral(species, self.domain.nearest_row(coord), lo, hi, weight),
            Axis::Y => self.col_integral(species, self.domain.nearest_col(coord), lo, hi, weight),
        }
    }

    pub fn line_integral(&self, species: usize, axis: Axis, coord: f64, lo: f64, hi: f64) -> f64 {
        self.weighted_line_integral(species, axis, coord, lo, hi, |_| 1.0)
    }

    pub(crate) fn row_integral(
        &self,
        s: usize,
        iy: usize,
        lo: f64,
        hi: f64,
        weight: impl Fn(f64) -> f64,
    ) -> f64 {
        self.domain
            .x_overlaps(lo, hi)
            .map(|(ix, mid, len)| weight(mid) * self.get(s, ix, iy) * len)
            .sum()
    }

    pub(crate) fn col_integral(
        &self,
        s: usize,
        ix: usize,
        lo: f64,
        hi: f64,
        weight: impl Fn(f64) -> f64,
    ) -> f64 {
        self.domain
            .y_overlaps(lo, hi)
            .map(|(iy, mid, len)| weight(mid) * self.get(s, ix, iy) * len)
            .sum()
    }

    /// Midpoint-rule integral of one species over `[lo, hi]^2`.
    pub fn square_integral(&self, s: usize, lo: f64, hi: f64) -> f64 {
        self.domain
            .y_overlaps(lo, hi)
            .map(|(iy, _, len)| len * self.row_integral(s, iy, lo, hi, |_| 1.0))
            .sum()
    }

    /// Integral of one species over the whole domain.
    pub fn total(&self, s: usize) -> f64 {
        let area = self.domain.cell_area();
        self.data.iter().skip(s).step_by(self.nspecies).sum::<f64>() * area
    }
}
