//! Rescaled Broadwell system
//! `dw_i/dt + (c_i + eta) . grad w_i = C_i(w) - w_i` on `[-L, L]^2`.
//!
//! The drift is affine in each coordinate, so characteristic feet are
//! computed in closed form: backward along `x' = x + s`, a point `x` comes
//! from `(x + s) e^{-dt} - s`. For `L > 1` every boundary point has an
//! outward (or tangent) drift for every species, so feet of grid points
//! always fall inside the domain and no inflow data is ever needed.

use super::advect::advect_separable;
use super::collision::{react, CollisionIntegrator};
use super::{Cadence, Monitors, RunOutput, RunStatus, DT_UNDERFLOW};
use crate::error::{Error, Result};
use crate::fields::{axis_taps, Boundary, Field, Interpolation, Taps};
use crate::functionals::FunctionalSeries;
use crate::model::VelocityModel;

const SPEEDS: [[f64; 2]; 4] = [[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledStepConfig {
    pub dt: f64,
    /// Half width `L` of the computational square `[-L, L]^2`.
    pub half_width: f64,
    pub collision_integrator: CollisionIntegrator,
    pub interpolation: Interpolation,
    /// When set to `theta`, values are capped at `theta ln t` after each step.
    pub log_cap: Option<f64>,
}

impl Default for RescaledStepConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            half_width: 3.0,
            collision_integrator: CollisionIntegrator::Rk2,
            interpolation: Interpolation::Bilinear,
            log_cap: None,
        }
    }
}

/// Backward foot, after time `dt`, of the characteristic of `species`
/// (0-based) through `point`.
pub fn characteristic_foot(point: [f64; 2], species: usize, dt: f64) -> [f64; 2] {
    let c = SPEEDS[species];
    let decay = (-dt).exp();
    [
        (point[0] + c[0]) * decay - c[0],
        (point[1] + c[1]) * decay - c[1],
    ]
}

fn check_setup(field: &Field, cfg: &RescaledStepConfig) -> Result<()> {
    if field.nspecies() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: field.nspecies(),
        });
    }
    if !(cfg.half_width > 1.0) {
        return Err(Error::InvalidStepConfig(format!(
            "half width L must exceed 1 so that all boundaries are outflow, got {}",
            cfg.half_width
        )));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(Error::InvalidStepConfig(format!(
            "dt must be positive, got {}",
            cfg.dt
        )));
    }
    let d = field.domain();
    let l = cfg.half_width;
    let tol = 1e-12 * l;
    if d.boundary != Boundary::Outflow
        || (d.xmin + l).abs() > tol
        || (d.xmax - l).abs() > tol
        || (d.ymin + l).abs() > tol
        || (d.ymax - l).abs() > tol
    {
        return Err(Error::InvalidStepConfig(format!(
            "rescaled runs need an outflow domain [-{l}, {l}]^2, got [{}, {}] x [{}, {}] ({:?})",
            d.xmin, d.xmax, d.ymin, d.ymax, d.boundary
        )));
    }
    Ok(())
}

/// One Strang step: half reaction `C(w) - w`, exact-foot semi-Lagrangian
/// transport, half reaction. Refused when `dt * sup w > 1`.
pub fn step_rescaled(field: &Field, cfg: &RescaledStepConfig) -> Result<Field> {
    check_setup(field, cfg)?;
    let sup = field.sup_norm();
    if sup.infinite {
        let mut out = field.clone();
        out.sanitize();
        return Ok(out);
    }
    check_cfl(cfg.dt, sup.value)?;
    Ok(step_unchecked(
        field,
        cfg,
        cfg.dt,
        &VelocityModel::broadwell2d(),
    ))
}

fn check_cfl(dt: f64, sup: f64) -> Result<()> {
    if dt * sup > 1.0 {
        return Err(Error::Cfl {
            dt,
            required: 1.0 / sup,
        });
    }
    Ok(())
}

fn foot_taps(field: &Field, dt: f64, method: Interpolation) -> (Vec<Vec<Taps>>, Vec<Vec<Taps>>) {
    let d = *field.domain();
    let decay = (-dt).exp();
    let tx = SPEEDS
        .iter()
        .map(|c| {
            (0..d.nx)
                .map(|ix| {
                    axis_taps(
                        (d.x(ix) + c[0]) * decay - c[0],
                        d.xmin,
                        d.hx(),
                        d.nx,
                        d.boundary,
                        method,
                    )
                })
                .collect()
        })
        .collect();
    let ty = SPEEDS
        .iter()
        .map(|c| {
            (0..d.ny)
                .map(|iy| {
                    axis_taps(
                        (d.y(iy) + c[1]) * decay - c[1],
                        d.ymin,
                        d.hy(),
                        d.ny,
                        d.boundary,
                        method,
                    )
                })
                .collect()
        })
        .collect();
    (tx, ty)
}

fn step_unchecked(
    field: &Field,
    cfg: &RescaledStepConfig,
    dt: f64,
    model: &VelocityModel,
) -> Field {
    let mut f = field.clone();
    react(&mut f, model, cfg.collision_integrator, 0.5 * dt, 1, true);
    let (tx, ty) = foot_taps(&f, dt, cfg.interpolation);
    let mut f = advect_separable(&f, &tx, &ty);
    react(&mut f, model, cfg.collision_integrator, 0.5 * dt, 1, true);
    f.sanitize();
    f.time = field.time + dt;
    if let Some(theta) = cfg.log_cap {
        let cap = (theta * f.time.ln()).max(0.0);
        f.data_mut().iter_mut().for_each(|v| *v = v.min(cap));
    }
    f
}

/// Integrates from `initial.time` to `t_end` with fixed `cfg.dt`, shortened
/// only to land on output times. A `residual` record (sup change over the
/// last step) is added to the series at every output time after the first.
pub fn run_rescaled(
    initial: &Field,
    cfg: &RescaledStepConfig,
    t_end: f64,
    monitors: &mut Monitors<'_>,
) -> Result<RunOutput> {
    check_setup(initial, cfg)?;
    if !(t_end > initial.time) {
        return Err(Error::InvalidStepConfig(format!(
            "t_end = {t_end} must exceed the initial time {}",
            initial.time
        )));
    }
    let model = VelocityModel::broadwell2d();
    let mut series = FunctionalSeries::new();
    let mut field = initial.clone();
    let mut cadence = Cadence::new(field.time, monitors.every_t());
    monitors.sample(&field, &mut series)?;
    series.push(field.time, "residual", 0.0, None, None)?;
    cadence.mark(field.time);

    let mut steps = 0usize;
    let mut status = RunStatus::Completed;
    let mut residual = None;
    let done = |t: f64| t >= t_end - 1e-12 * t_end.abs().max(1.0);
    while !done(field.time) {
        let sup = field.sup_norm();
        if sup.infinite || field.is_diverged() {
            status = RunStatus::Diverged;
            break;
        }
        let mut dt = cfg.dt.min(t_end - field.time);
        let next = cadence.next_time();
        if next > field.time {
            dt = dt.min(next - field.time);
        }
        if dt < DT_UNDERFLOW {
            status = RunStatus::DtUnderflow;
            break;
        }
        check_cfl(dt, sup.value)?;
        let mut new = step_unchecked(&field, cfg, dt, &model);
        new.time = cadence.snap(new.time, t_end);
        steps += 1;
        let sample = cadence.due(new.time) || done(new.time) || new.is_diverged();
        if sample {
            residual = Some(new.sup_distance(&field));
        }
        field = new;
        if field.is_diverged() {
            status = RunStatus::Diverged;
            break;
        }
        if cadence.due(field.time) {
            monitors.sample(&field, &mut series)?;
            series.push(field.time, "residual", residual.unwrap_or(0.0), None, None)?;
            cadence.mark(field.time);
        }
    }
    if cadence.last_sampled != Some(field.time) {
        monitors.sample(&field, &mut series)?;
        series.push(
            field.time,
            "residual",
            residual.unwrap_or(f64::NAN),
            None,
            None,
        )?;
    }
    Ok(RunOutput {
        field,
        series,
        status,
        steps,
        final_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Domain;

    fn dom(n: usize) -> Domain {
        Domain::square(3.0, n, Boundary::Outflow).unwrap()
    }

    #[test]
    fn foot_examples() {
        for dt in [0.0, 0.3, 2.0] {
            assert!((characteristic_foot([-1.0, -1.0], 0, dt)[0] + 1.0).abs() < 1e-15);
        }
        let f = characteristic_foot([0.0, 0.0], 0, 2f64.ln());
        assert!((f[0] + 0.5).abs() < 1e-15);
        let f = characteristic_foot([0.3, -0.7], 2, 0.0);
        assert!((f[0] - 0.3).abs() < 1e-15 && (f[1] + 0.7).abs() < 1e-15);
    }

    #[test]
    fn boundary_drift_points_outward() {
        for l in [1.0 + 1e-9, 1.5, 3.0, 10.0] {
            for c in SPEEDS {
                for s in [-l, l] {
                    // x-edges: drift x + c_x has the sign of the edge
                    assert!((s + c[0]) * s.signum() >= 0.0);
                    assert!((s + c[1]) * s.signum() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn feet_stay_inside() {
        let d = dom(32);
        for (s, _) in SPEEDS.iter().enumerate() {
            for p in [[d.x(0), d.y(31)], [d.x(31), d.y(0)], [3.0, -3.0]] {
                let f = characteristic_foot(p, s, 0.7);
                assert!(f[0].abs() <= 3.0 && f[1].abs() <= 3.0);
            }
        }
    }

    #[test]
    fn zero_stays_zero() {
        let f = Field::zeros(dom(16), 4);
        let out = step_rescaled(&f, &RescaledStepConfig::default()).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_data_decays_exponentially() {
        let a = 0.7;
        let cfg = RescaledStepConfig {
            dt: 0.01,
            ..Default::default()
        };
        let mut f = Field::uniform(dom(64), &[a; 4]);
        for k in 1..=20 {
            f = step_rescaled(&f, &cfg).unwrap();
            let want = a * (-0.01 * k as f64).exp();
            let d = *f.domain();
            for iy in d.rows_within(-1.0, 1.0) {
                for ix in d.cols_within(-1.0, 1.0) {
                    assert!((f.get(3, ix, iy) - want).abs() < 1e-6 * k as f64);
                }
            }
        }
    }

    #[test]
    fn cfl_violation_reports_required_dt() {
        let f = Field::uniform(dom(16), &[4.0, 0.0, 0.0, 0.0]);
        let cfg = RescaledStepConfig {
            dt: 0.5,
            ..Default::default()
        };
        match step_rescaled(&f, &cfg) {
            Err(Error::Cfl { required, .. }) => assert_eq!(required, 0.25),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_domain() {
        let f = Field::zeros(Domain::square(2.0, 16, Boundary::Outflow).unwrap(), 4);
        assert!(step_rescaled(&f, &RescaledStepConfig::default()).is_err());
        let f = Field::zeros(Domain::square(3.0, 16, Boundary::Periodic).unwrap(), 4);
        assert!(step_rescaled(&f, &RescaledStepConfig::default()).is_err());
        let cfg = RescaledStepConfig {
            half_width: 1.0,
            ..Default::default()
        };
        let f = Field::zeros(Domain::square(1.0, 16, Boundary::Outflow).unwrap(), 4);
        assert!(step_rescaled(&f, &cfg).is_err());
    }

    #[test]
    fn sup_nonincreasing_without_collisions() {
        // a single species never meets a collision partner
        let mut f = Field::random_smoothed(dom(48), 4, 1.0, 5, 1);
        for (i, v) in f.data_mut().iter_mut().enumerate() {
            if i % 4 != 1 {
                *v = 0.0;
            }
        }
        let cfg = RescaledStepConfig::default();
        let mut prev = f.sup_norm().value;
        for _ in 0..30 {
            f = step_rescaled(&f, &cfg).unwrap();
            let s = f.sup_norm().value;
            assert!(s <= prev + 1e-12);
            prev = s;
        }
    }

    #[test]
    fn zero_run_has_zero_residual() {
        let f = Field::zeros(dom(16), 4);
        let out = run_rescaled(
            &f,
            &RescaledStepConfig::default(),
            1.0,
            &mut Monitors::new(0.5),
        )
        .unwrap();
        assert_eq!(out.status, RunStatus::Completed);
        assert_eq!(out.final_residual, Some(0.0));
        assert!(!out.is_nonstationary());
        assert!(out.series.values("residual").all(|v| v == 0.0));
    }

    #[test]
    fn log_cap_is_enforced() {
        let mut f = Field::uniform(dom(16), &[0.5; 4]);
        f.time = 12.0;
        let cfg = RescaledStepConfig {
            log_cap: Some(0.01),
            ..Default::default()
        };
        let out = step_rescaled(&f, &cfg).unwrap();
        let cap = 0.01 * out.time.ln();
        assert!(out.data().iter().all(|&v| v <= cap));
    }
}
