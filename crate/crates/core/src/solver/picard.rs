//! Successive substitution in the Duhamel form
//! `u_i(t, x) = u0_i(x - c_i t) + int_0^t C_i(u)(s, x - c_i (t - s)) ds`.

use super::advect::advect_separable;
use super::physical::uniform_shift_taps;
use crate::error::{Error, Result};
use crate::fields::{Field, Interpolation};
use crate::model::VelocityModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Time horizon `T`.
    pub horizon: f64,
    /// Stop once successive iterates differ by less than this in sup norm.
    pub tol: f64,
    pub max_iters: usize,
    /// Number of trapezoidal intervals on `[0, T]`.
    pub substeps: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            horizon: 0.2,
            tol: 1e-8,
            max_iters: 30,
            substeps: 16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    /// Solution at the `substeps + 1` quadrature nodes.
    pub trajectory: Vec<Field>,
    pub iterations: usize,
    /// Sup distance between consecutive iterates, one entry per iteration.
    pub distances: Vec<f64>,
}

impl PicardSolution {
    pub fn endpoint(&self) -> &Field {
        self.trajectory.last().expect("trajectory is never empty")
    }
}

/// Consecutive increases of the iterate distance tolerated before giving up.
const MAX_INCREASES: usize = 3;

/// Iterates the integral map starting from free streaming, until the sup
/// distance between consecutive trajectories drops below `cfg.tol`.
/// Feet are evaluated by bilinear interpolation.
pub fn picard_solve(
    initial: &Field,
    model: &VelocityModel,
    cfg: &PicardConfig,
) -> Result<PicardSolution> {
    if !(cfg.horizon > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::InvalidStepConfig(format!(
            "Picard horizon and tolerance must be positive (T = {}, tol = {})",
            cfg.horizon, cfg.tol
        )));
    }
    if cfg.substeps < 8 || cfg.max_iters == 0 {
        return Err(Error::InvalidStepConfig(format!(
            "Picard needs at least 8 quadrature intervals and one iteration (substeps = {}, max_iters = {})",
            cfg.substeps, cfg.max_iters
        )));
    }
    if initial.nspecies() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            got: initial.nspecies(),
        });
    }
    let nodes = cfg.substeps + 1;
    let ds = cfg.horizon / cfg.substeps as f64;
    let t0 = initial.time;

    // stencils for a shift by c_i * lag * ds, lag = 0..=substeps
    let lag_taps: Vec<_> = (0..nodes)
        .map(|lag| {
            uniform_shift_taps(
                initial,
                model.speeds(),
                lag as f64 * ds,
                Interpolation::Bilinear,
            )
        })
        .collect();
    let shift = |f: &Field, lag: usize| {
        let (tx, ty) = &lag_taps[lag];
        advect_separable(f, tx, ty)
    };

    let free: Vec<Field> = (0..nodes)
        .map(|n| {
            let mut f = shift(initial, n);
            f.time = t0 + n as f64 * ds;
            f
        })
        .collect();

    let mut current = free.clone();
    let mut distances = Vec::new();
    let mut increases = 0usize;
    for iteration in 1..=cfg.max_iters {
        let rates: Vec<Field> = current.iter().map(|f| collision_field(f, model)).collect();
        let mut next = Vec::with_capacity(nodes);
        next.push(free[0].clone());
        for (n, streamed) in free.iter().enumerate().skip(1) {
            let mut acc = streamed.data().to_vec();
            for (k, r) in rates.iter().enumerate().take(n + 1) {
                let w = if k == 0 || k == n { 0.5 * ds } else { ds };
                let moved = shift(r, n - k);
                for (a, v) in acc.iter_mut().zip(moved.data()) {
                    *a += w * v;
                }
            }
            let mut f = Field::from_data(*initial.domain(), initial.nspecies(), acc)?;
            f.time = streamed.time;
            next.push(f);
        }
        let dist = next
            .iter()
            .zip(&current)
            .map(|(a, b)| a.sup_distance(b))
            .fold(0.0, f64::max);
        if let Some(&prev) = distances.last() {
            increases = if dist > prev { increases + 1 } else { 0 };
        }
        distances.push(dist);
        current = next;
        if dist < cfg.tol {
            return Ok(PicardSolution {
                trajectory: current,
                iterations: iteration,
                distances,
            });
        }
        if increases >= MAX_INCREASES || !dist.is_finite() {
            return Err(Error::NonContraction {
                iterations: iteration,
                distance: dist,
            });
        }
    }
    Err(Error::NonContraction {
        iterations: cfg.max_iters,
        distance: *distances.last().unwrap_or(&f64::NAN),
    })
}

/// Pointwise collision rates stored in a field-shaped buffer.
fn collision_field(f: &Field, model: &VelocityModel) -> Field {
    let n = f.nspecies();
    let mut out = vec![0.0; f.data().len()];
    for (u, r) in f.data().chunks_exact(n).zip(out.chunks_exact_mut(n)) {
        model.collision_rhs_into(u, r);
    }
    f.with_data(out)
}
