//! Probes that write monitored quantities into a [`FunctionalSeries`], and
//! the pass/fail policy applied to the recorded bounds.

use std::str::FromStr;

use super::lines::{line_max, LinePair, MovingLineSeries, MOVING_LINE_OFFSETS};
use super::lyapunov::{
    comparison_ode_thm1, comparison_thm2, decay_bound_35, line_bound_49, mass, q14_thm1_sup,
    q14_thm2_sup, Theorem1Params, Theorem2Params,
};
use super::FunctionalSeries;
use crate::error::{Error, Result};
use crate::fields::{Axis, Field};
use crate::solver::Probe;

/// Multiplicative slack on every recorded bound.
pub const BOUND_SLACK: f64 = 1.05;
/// Absolute slack for values near zero.
pub const BOUND_ABS_FLOOR: f64 = 1e-8;
/// Allowed increase between samples of a moving-line series, relative to
/// its first value.
pub const MONOTONE_TOL: f64 = 1e-3;

pub fn bound_holds(value: f64, bound: f64) -> bool {
    value <= bound * BOUND_SLACK + BOUND_ABS_FLOOR
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MonitorKind {
    Sup,
    Q14Thm1,
    Q14Thm2,
    Lines,
    Mass,
    Moving,
}

impl MonitorKind {
    pub fn name(self) -> &'static str {
        match self {
            MonitorKind::Sup => "sup",
            MonitorKind::Q14Thm1 => "q14_thm1",
            MonitorKind::Q14Thm2 => "q14_thm2",
            MonitorKind::Lines => "lines",
            MonitorKind::Mass => "mass",
            MonitorKind::Moving => "moving",
        }
    }
}

impl FromStr for MonitorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "sup" => MonitorKind::Sup,
            "q14_thm1" => MonitorKind::Q14Thm1,
            "q14_thm2" => MonitorKind::Q14Thm2,
            "lines" => MonitorKind::Lines,
            "mass" => MonitorKind::Mass,
            "moving" => MonitorKind::Moving,
            other => {
                return Err(Error::config(
                    "monitors",
                    format!("unknown monitor `{other}` (expected sup, q14_thm1, q14_thm2, lines, mass, moving)"),
                ))
            }
        })
    }
}

/// Rescaled-frame monitors. Records:
/// `sup`; `q14_thm1`; `q14_thm2` (for `t >= t0`); `mass` and
/// `integral_w{i}`; `line_w{i}_h`, `line_w{i}_v`; `moving_{pair}_{k}`.
#[derive(Debug, Clone)]
pub struct RescaledProbe {
    kinds: Vec<MonitorKind>,
    thm1: Option<Theorem1Params>,
    thm2: Option<Theorem2Params>,
    origin: Option<f64>,
    initial_sup: f64,
    moving: Vec<(String, MovingLineSeries)>,
}

impl RescaledProbe {
    pub fn new(kinds: &[MonitorKind]) -> Self {
        Self {
            kinds: kinds.to_vec(),
            thm1: None,
            thm2: None,
            origin: None,
            initial_sup: 0.0,
            moving: Vec::new(),
        }
    }

    /// Adds the decay bounds; their time origin is the first sampled time.
    pub fn with_thm1(mut self, params: Theorem1Params) -> Self {
        self.thm1 = Some(params);
        self
    }

    pub fn with_thm2(mut self, params: Theorem2Params) -> Self {
        self.thm2 = Some(params);
        self
    }

    pub fn moving_lines(&self) -> impl Iterator<Item = (&str, &MovingLineSeries)> {
        self.moving.iter().map(|(n, s)| (n.as_str(), s))
    }

    fn has(&self, k: MonitorKind) -> bool {
        self.kinds.contains(&k)
    }
}

impl Probe for RescaledProbe {
    fn sample(&mut self, field: &Field, series: &mut FunctionalSeries) -> Result<()> {
        let t = field.time;
        let origin = *self.origin.get_or_insert(t);
        let sup = field.sup_norm().value;
        if t == origin {
            self.initial_sup = sup;
        }
        let elapsed = t - origin;
        let thm2_active = self.thm2.filter(|p| t >= p.t0 * (1.0 - 1e-12));

        if self.has(MonitorKind::Sup) {
            series.push(t, "sup", sup, None, None)?;
        }
        if self.has(MonitorKind::Q14Thm1) {
            if let Some(p) = self.thm1 {
                series.push(
                    t,
                    "q14_thm1",
                    q14_thm1_sup(field, &p),
                    Some(comparison_ode_thm1(&p, elapsed)),
                    None,
                )?;
            }
        }
        if self.has(MonitorKind::Q14Thm2) {
            if let Some(p) = thm2_active {
                series.push(
                    t,
                    "q14_thm2",
                    q14_thm2_sup(field, &p, t)?,
                    Some(comparison_thm2(&p, t)),
                    None,
                )?;
            }
        }
        if self.has(MonitorKind::Mass) {
            series.push(t, "mass", mass(field), None, None)?;
            let bound = self.thm1.map(|p| decay_bound_35(&p, elapsed));
            for s in 0..field.nspecies() {
                series.push(
                    t,
                    &format!("integral_w{}", s + 1),
                    field.square_integral(s, -1.0, 1.0),
                    bound,
                    None,
                )?;
            }
        }
        if self.has(MonitorKind::Lines) {
            let bound = match thm2_active {
                Some(p) => line_bound_49(&p, t),
                None => 4.0 * self.initial_sup,
            };
            for s in 0..field.nspecies() {
                for (axis, tag) in [(Axis::X, "h"), (Axis::Y, "v")] {
                    let name = format!("line_w{}_{tag}", s + 1);
                    series.push(t, &name, line_max(field, s, axis), Some(bound), None)?;
                }
            }
        }
        if self.has(MonitorKind::Moving) {
            if self.moving.is_empty() {
                for pair in LinePair::ALL {
                    for (k, &off) in MOVING_LINE_OFFSETS.iter().enumerate() {
                        let name = format!("moving_{}_{k}", pair.label());
                        self.moving.push((
                            name,
                            MovingLineSeries::new(pair, pair.start_coord(off), origin),
                        ));
                    }
                }
            }
            for (name, line) in &mut self.moving {
                if let Some((time, coord, value)) = line.sample(field) {
                    series.push(time, name, value, None, Some(coord))?;
                }
            }
        }
        Ok(())
    }
}

/// Physical-frame conservation diagnostics: `total_mass`, `momentum_x`,
/// `momentum_y`, `clamped_mass` and `sup`.
#[derive(Debug, Clone)]
pub struct PhysicalProbe {
    speeds: Vec<[f64; 2]>,
}

impl PhysicalProbe {
    pub fn new(speeds: &[[f64; 2]]) -> Self {
        Self {
            speeds: speeds.to_vec(),
        }
    }
}

impl Probe for PhysicalProbe {
    fn sample(&mut self, field: &Field, series: &mut FunctionalSeries) -> Result<()> {
        let t = field.time;
        let totals: Vec<f64> = (0..field.nspecies()).map(|s| field.total(s)).collect();
        let (mut px, mut py) = (0.0, 0.0);
        for (m, c) in totals.iter().zip(&self.speeds) {
            px += c[0] * m;
            py += c[1] * m;
        }
        series.push(t, "total_mass", totals.iter().sum(), None, None)?;
        series.push(t, "momentum_x", px, None, None)?;
        series.push(t, "momentum_y", py, None, None)?;
        series.push(t, "clamped_mass", field.clamped_mass(), None, None)?;
        series.push(t, "sup", field.sup_norm().value, None, None)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub checked: usize,
    pub passed: usize,
    pub violations: Vec<String>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn failed(&self) -> usize {
        self.checked - self.passed
    }
}

/// Applies [`bound_holds`] to every bounded record and the monotonicity
/// test to every `moving_*` series.
pub fn check_series(series: &FunctionalSeries) -> CheckReport {
    let mut rep = CheckReport::default();
    for r in series.records() {
        if let Some(b) = r.bound {
            rep.checked += 1;
            if bound_holds(r.value, b) {
                rep.passed += 1;
            } else {
                rep.violations.push(format!(
                    "{} at t = {}: {} exceeds bound {}",
                    r.name, r.time, r.value, b
                ));
            }
        }
    }
    for name in series.names() {
        if !name.starts_with("moving_") {
            continue;
        }
        let pts = series.points(name);
        let Some(&(_, v0)) = pts.first() else {
            continue;
        };
        for w in pts.windows(2) {
            rep.checked += 1;
            let rise = w[1].1 - w[0].1;
            if rise <= MONOTONE_TOL * v0 + 1e-12 {
                rep.passed += 1;
            } else {
                rep.violations
                    .push(format!("{name} increases by {rise} at t = {}", w[1].0));
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Boundary, Domain};

    #[test]
    fn slack_policy() {
        assert!(bound_holds(1.05, 1.0));
        assert!(!bound_holds(1.0501, 1.0));
        assert!(bound_holds(5e-9, 0.0));
        assert!(!bound_holds(2e-8, 0.0));
    }

    #[test]
    fn parse_kinds() {
        assert_eq!(
            "q14_thm2".parse::<MonitorKind>().unwrap(),
            MonitorKind::Q14Thm2
        );
        assert!("bogus".parse::<MonitorKind>().is_err());
    }

    #[test]
    fn rescaled_probe_records() {
        let d = Domain::square(3.0, 32, Boundary::Outflow).unwrap();
        let f = Field::uniform(d, &[0.5; 4]);
        let kinds = [
            MonitorKind::Sup,
            MonitorKind::Q14Thm1,
            MonitorKind::Mass,
            MonitorKind::Lines,
            MonitorKind::Moving,
        ];
        let mut probe = RescaledProbe::new(&kinds).with_thm1(Theorem1Params::new(1.0).unwrap());
        let mut s = FunctionalSeries::new();
        probe.sample(&f, &mut s).unwrap();
        assert_eq!(s.values("sup").next(), Some(0.5));
        assert!(s.values("integral_w2").next().is_some());
        assert_eq!(s.of("line_w1_h").next().unwrap().bound, Some(2.0));
        assert_eq!(
            s.names()
                .iter()
                .filter(|n| n.starts_with("moving_"))
                .count(),
            20
        );
        assert!(check_series(&s).ok());
    }

    #[test]
    fn check_flags_violations() {
        let mut s = FunctionalSeries::new();
        s.push(0.0, "q", 1.0, Some(0.5), None).unwrap();
        s.push(0.0, "moving_14h_0", 1.0, None, None).unwrap();
        s.push(1.0, "moving_14h_0", 1.0005, None, None).unwrap();
        s.push(2.0, "moving_14h_0", 1.1, None, None).unwrap();
        let r = check_series(&s);
        assert_eq!(r.checked, 3);
        assert_eq!(r.passed, 1);
        assert_eq!(r.violations.len(), 2);
    }

    #[test]
    fn physical_probe_momentum() {
        let d = Domain::square(1.0, 8, Boundary::Periodic).unwrap();
        let f = Field::uniform(d, &[1.0, 0.0, 0.0, 0.0]);
        let mut p = PhysicalProbe::new(crate::model::VelocityModel::broadwell2d().speeds());
        let mut s = FunctionalSeries::new();
        p.sample(&f, &mut s).unwrap();
        assert!((s.values("momentum_x").next().unwrap() - 4.0).abs() < 1e-12);
        assert!((s.values("total_mass").next().unwrap() - 4.0).abs() < 1e-12);
    }
}
