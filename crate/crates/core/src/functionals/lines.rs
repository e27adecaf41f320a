//! Line integrals over the monitored square, on fixed grid lines and along
//! lines transported by the rescaled drift.

use crate::fields::{axis_taps, Axis, Field, Interpolation};

/// Species pair sharing one drift component, and the moving line it is
/// integrated along. `P14H`: species 1 and 4 on a horizontal line moving
/// with `y' = y + 1`; the others follow the same pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinePair {
    P14H,
    P34V,
    P12V,
    P23H,
}

/// Start offsets, measured from the fixed line, of the monitored lines.
pub const MOVING_LINE_OFFSETS: [f64; 5] = [0.0, 0.1, 0.5, 1.0, 1.5];

impl LinePair {
    pub const ALL: [LinePair; 4] = [
        LinePair::P14H,
        LinePair::P34V,
        LinePair::P12V,
        LinePair::P23H,
    ];

    /// 0-based species indices.
    pub fn species(self) -> [usize; 2] {
        match self {
            LinePair::P14H => [0, 3],
            LinePair::P34V => [2, 3],
            LinePair::P12V => [0, 1],
            LinePair::P23H => [1, 2],
        }
    }

    /// Direction of integration; the line moves across it.
    pub fn axis(self) -> Axis {
        match self {
            LinePair::P14H | LinePair::P23H => Axis::X,
            LinePair::P34V | LinePair::P12V => Axis::Y,
        }
    }

    /// Shared drift offset: the line coordinate obeys `c' = c + sigma`.
    pub fn sigma(self) -> f64 {
        match self {
            LinePair::P14H | LinePair::P12V => 1.0,
            LinePair::P34V | LinePair::P23H => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LinePair::P14H => "14h",
            LinePair::P34V => "34v",
            LinePair::P12V => "12v",
            LinePair::P23H => "23h",
        }
    }

    /// Coordinate of the line at `offset` from the repelling fixed line.
    pub fn start_coord(self, offset: f64) -> f64 {
        self.sigma() * (offset - 1.0)
    }

    /// Position after time `elapsed` of the line that started at `start`.
    pub fn coord_at(self, start: f64, elapsed: f64) -> f64 {
        let s = self.sigma();
        (start + s) * elapsed.exp() - s
    }
}

/// Integral of the pair's total density over `[-1, 1]` along the line at
/// `coord`, interpolated linearly between neighbouring grid lines.
pub fn moving_line_value(field: &Field, pair: LinePair, coord: f64) -> f64 {
    let d = field.domain();
    let [a, b] = pair.species();
    match pair.axis() {
        Axis::X => axis_taps(
            coord,
            d.ymin,
            d.hy(),
            d.ny,
            d.boundary,
            Interpolation::Bilinear,
        )
        .iter()
        .map(|(iy, w)| {
            w * (field.row_integral(a, iy, -1.0, 1.0, |_| 1.0)
                + field.row_integral(b, iy, -1.0, 1.0, |_| 1.0))
        })
        .sum(),
        Axis::Y => axis_taps(
            coord,
            d.xmin,
            d.hx(),
            d.nx,
            d.boundary,
            Interpolation::Bilinear,
        )
        .iter()
        .map(|(ix, w)| {
            w * (field.col_integral(a, ix, -1.0, 1.0, |_| 1.0)
                + field.col_integral(b, ix, -1.0, 1.0, |_| 1.0))
        })
        .sum(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovingLineSeries {
    pub pair: LinePair,
    pub start: f64,
    pub t_start: f64,
    /// `(time, line coordinate, value)`.
    pub points: Vec<(f64, f64, f64)>,
    /// Set when the line left `[-1, 1]` before the last snapshot.
    pub truncated: bool,
}

impl MovingLineSeries {
    pub fn new(pair: LinePair, start: f64, t_start: f64) -> Self {
        Self {
            pair,
            start,
            t_start,
            points: Vec::new(),
            truncated: false,
        }
    }

    /// Samples `field` on the current line position. Returns the recorded
    /// point, or `None` once the line has left the square.
    pub fn sample(&mut self, field: &Field) -> Option<(f64, f64, f64)> {
        if self.truncated {
            return None;
        }
        let c = self.pair.coord_at(self.start, field.time - self.t_start);
        if c.abs() > 1.0 + 1e-12 {
            self.truncated = true;
            return None;
        }
        let p = (field.time, c, moving_line_value(field, self.pair, c));
        self.points.push(p);
        Some(p)
    }

    /// Largest increase between consecutive samples.
    pub fn max_increase(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1].2 - w[0].2)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Samples the pair's line integral along the moving line through `start`
/// at the time of the first snapshot.
pub fn moving_line_monitor(snapshots: &[Field], pair: LinePair, start: f64) -> MovingLineSeries {
    let t0 = snapshots.first().map_or(0.0, |f| f.time);
    let mut series = MovingLineSeries::new(pair, start, t0);
    for f in snapshots {
        if series.sample(f).is_none() {
            break;
        }
    }
    series
}

/// Largest integral of one species over `[-1, 1]` along grid lines with
/// `|coord| <= 1`. `Axis::X` integrates along rows.
pub fn line_max(field: &Field, species: usize, axis: Axis) -> f64 {
    let d = field.domain();
    match axis {
        Axis::X => d
            .rows_within(-1.0, 1.0)
            .map(|iy| field.row_integral(species, iy, -1.0, 1.0, |_| 1.0))
            .fold(0.0, f64::max),
        Axis::Y => d
            .cols_within(-1.0, 1.0)
            .map(|ix| field.col_integral(species, ix, -1.0, 1.0, |_| 1.0))
            .fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Boundary, Domain};

    #[test]
    fn fixed_line_does_not_move() {
        for p in LinePair::ALL {
            let c = p.start_coord(0.0);
            assert_eq!(c, -p.sigma());
            assert_eq!(p.coord_at(c, 3.0), c);
        }
        assert!((LinePair::P14H.coord_at(-0.5, 2f64.ln()) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn zero_field_gives_zero_series() {
        let d = Domain::square(3.0, 32, Boundary::Outflow).unwrap();
        let snaps: Vec<Field> = (0..5)
            .map(|k| {
                let mut f = Field::zeros(d, 4);
                f.time = 0.1 * k as f64;
                f
            })
            .collect();
        let s = moving_line_monitor(&snaps, LinePair::P23H, 0.9);
        assert_eq!(s.points.len(), 5);
        assert!(s.points.iter().all(|p| p.2 == 0.0));
        assert!(!s.truncated);
    }

    #[test]
    fn line_exit_truncates() {
        let d = Domain::square(3.0, 32, Boundary::Outflow).unwrap();
        let snaps: Vec<Field> = (0..4)
            .map(|k| {
                let mut f = Field::zeros(d, 4);
                f.time = k as f64;
                f
            })
            .collect();
        // offset 1: line starts at 0 and reaches 1 at t = ln 2
        let s = moving_line_monitor(&snaps, LinePair::P12V, 0.0);
        assert_eq!(s.points.len(), 1);
        assert!(s.truncated);
    }

    #[test]
    fn uniform_value_and_interpolation() {
        let d = Domain::square(3.0, 60, Boundary::Outflow).unwrap();
        let f = Field::uniform(d, &[1.0, 2.0, 3.0, 4.0]);
        assert!((moving_line_value(&f, LinePair::P14H, 0.123) - 10.0).abs() < 1e-12);
        assert!((moving_line_value(&f, LinePair::P23H, -0.77) - 10.0).abs() < 1e-12);
        // linear profile in y is reproduced between rows
        let g = Field::from_fn(d, 4, |s, _, y| if s == 0 { 1.0 + y } else { 0.0 });
        assert!((moving_line_value(&g, LinePair::P14H, 0.321) - 2.0 * 1.321).abs() < 1e-12);
        assert!((line_max(&f, 2, Axis::Y) - 6.0).abs() < 1e-12);
    }
}
