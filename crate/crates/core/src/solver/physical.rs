//! Physical system `du_i/dt + c_i . grad u_i = sum_jk a_ijk u_j u_k`,
//! Strang-split into pointwise collision and per-species transport.

use super::advect::{advect_separable, shift_exact};
use super::collision::{react, CollisionIntegrator};
use super::{Cadence, Monitors, RunOutput, RunStatus, DT_UNDERFLOW};
use crate::error::{Error, Result};
use crate::fields::{axis_taps, Field, Interpolation, Taps};
use crate::functionals::FunctionalSeries;
use crate::model::VelocityModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DtMode {
    /// `dt = h`: each species moves by whole cells, no interpolation.
    /// Collision half-steps are subcycled when the density limit is tighter.
    #[default]
    LockStep,
    /// Arbitrary `dt`, feet interpolated.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalStepConfig {
    pub dt_mode: DtMode,
    pub collision_integrator: CollisionIntegrator,
    /// Largest step in `Free` mode.
    pub dt_max: f64,
    /// Bound on `dt * max(1, sup u)`.
    pub density_cfl: f64,
    pub interpolation: Interpolation,
}

impl Default for PhysicalStepConfig {
    fn default() -> Self {
        Self {
            dt_mode: DtMode::LockStep,
            collision_integrator: CollisionIntegrator::Rk2,
            dt_max: 0.01,
            density_cfl: 0.5,
            interpolation: Interpolation::Bilinear,
        }
    }
}

impl PhysicalStepConfig {
    /// Largest step the collision term tolerates at sup density `sup`.
    pub fn admissible_dt(&self, sup: f64) -> f64 {
        self.density_cfl / sup.max(1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.density_cfl > 0.0 && self.density_cfl <= 1.0) {
            return Err(Error::InvalidStepConfig(format!(
                "density_cfl must lie in (0, 1], got {}",
                self.density_cfl
            )));
        }
        if self.dt_mode == DtMode::Free && !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::InvalidStepConfig(format!(
                "dt_max must be positive, got {}",
                self.dt_max
            )));
        }
        Ok(())
    }
}

fn check_setup(field: &Field, model: &VelocityModel, cfg: &PhysicalStepConfig) -> Result<()> {
    cfg.validate()?;
    if field.nspecies() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            got: field.nspecies(),
        });
    }
    let report = model.validate_conservation();
    if !report.valid {
        return Err(Error::InvalidModel(format!(
            "conservation identities violated (mass {:e}, momentum {:e}, energy {:e})",
            report.mass, report.momentum, report.energy
        )));
    }
    if cfg.collision_integrator == CollisionIntegrator::ExactPairExchange
        && model.has_collisions()
        && !model.is_broadwell()
    {
        return Err(Error::InvalidStepConfig(
            "the exact pair-exchange integrator only applies to the Broadwell model".into(),
        ));
    }
    if cfg.dt_mode == DtMode::LockStep {
        let d = field.domain();
        if (d.hx() - d.hy()).abs() > 1e-12 * d.hx() {
            return Err(Error::InvalidStepConfig(format!(
                "lock-step mode needs square cells, got hx = {}, hy = {}",
                d.hx(),
                d.hy()
            )));
        }
        if model.speeds().iter().flatten().any(|c| c.fract() != 0.0) {
            return Err(Error::InvalidStepConfig(
                "lock-step mode needs integer speed components".into(),
            ));
        }
    }
    Ok(())
}

/// One Strang step of length `dt`: half collision, transport, half collision.
///
/// In `LockStep` mode `dt` must equal the cell size. In `Free` mode a step
/// with `dt * max(1, sup u) > density_cfl` is refused with the admissible dt.
pub fn step_physical(
    field: &Field,
    model: &VelocityModel,
    cfg: &PhysicalStepConfig,
    dt: f64,
) -> Result<Field> {
    check_setup(field, model, cfg)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidStepConfig(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if cfg.dt_mode == DtMode::LockStep {
        let h = field.domain().hx();
        if (dt - h).abs() > 1e-12 * h {
            return Err(Error::InvalidStepConfig(format!(
                "lock-step mode needs dt = h = {h}, got {dt}"
            )));
        }
    }
    let sup = field.sup_norm();
    if sup.infinite {
        let mut out = field.clone();
        out.sanitize();
        return Ok(out);
    }
    let allowed = cfg.admissible_dt(sup.value);
    if cfg.dt_mode == DtMode::Free && dt > allowed * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            dt,
            required: allowed,
        });
    }
    Ok(step_unchecked(
        field,
        model,
        cfg,
        dt,
        subcycles(cfg, dt, allowed),
    ))
}

fn subcycles(cfg: &PhysicalStepConfig, dt: f64, allowed: f64) -> usize {
    match cfg.dt_mode {
        DtMode::Free => 1,
        DtMode::LockStep => ((dt / allowed) * (1.0 - 1e-12)).ceil().max(1.0) as usize,
    }
}

fn step_unchecked(
    field: &Field,
    model: &VelocityModel,
    cfg: &PhysicalStepConfig,
    dt: f64,
    sub: usize,
) -> Field {
    let mut f = field.clone();
    let half = 0.5 * dt / sub as f64;
    react(&mut f, model, cfg.collision_integrator, half, sub, false);
    let mut f = transport(&f, model, cfg, dt);
    react(&mut f, model, cfg.collision_integrator, half, sub, false);
    f.sanitize();
    f.time = field.time + dt;
    f
}

fn transport(field: &Field, model: &VelocityModel, cfg: &PhysicalStepConfig, dt: f64) -> Field {
    let d = *field.domain();
    match cfg.dt_mode {
        DtMode::LockStep => {
            let shifts: Vec<(i64, i64)> = model
                .speeds()
                .iter()
                .map(|c| {
                    (
                        (c[0] * dt / d.hx()).round() as i64,
                        (c[1] * dt / d.hy()).round() as i64,
                    )
                })
                .collect();
            shift_exact(field, &shifts)
        }
        DtMode::Free => {
            let (tx, ty) = uniform_shift_taps(field, model.speeds(), dt, cfg.interpolation);
            advect_separable(field, &tx, &ty)
        }
    }
}

/// Stencils for feet `x - c_i t` of every species.
pub(super) fn uniform_shift_taps(
    field: &Field,
    speeds: &[[f64; 2]],
    t: f64,
    method: Interpolation,
) -> (Vec<Vec<Taps>>, Vec<Vec<Taps>>) {
    let d = *field.domain();
    let tx = speeds
        .iter()
        .map(|c| {
            (0..d.nx)
                .map(|ix| axis_taps(d.x(ix) - c[0] * t, d.xmin, d.hx(), d.nx, d.boundary, method))
                .collect()
        })
        .collect();
    let ty = speeds
        .iter()
        .map(|c| {
            (0..d.ny)
                .map(|iy| axis_taps(d.y(iy) - c[1] * t, d.ymin, d.hy(), d.ny, d.boundary, method))
                .collect()
        })
        .collect();
    (tx, ty)
}

/// Integrates from `initial.time` to `t_end`.
///
/// `Free` mode starts each step at `dt_max` and halves it until the density
/// limit holds; steps are shortened to land on output times and `t_end`.
/// `LockStep` mode runs to the first multiple of `h` at or past `t_end`.
/// The run stops early with `Diverged` on non-finite values and with
/// `DtUnderflow` once the admissible step drops below [`DT_UNDERFLOW`].
pub fn run_physical(
    initial: &Field,
    model: &VelocityModel,
    cfg: &PhysicalStepConfig,
    t_end: f64,
    monitors: &mut Monitors<'_>,
) -> Result<RunOutput> {
    check_setup(initial, model, cfg)?;
    if !(t_end > initial.time) {
        return Err(Error::InvalidStepConfig(format!(
            "t_end = {t_end} must exceed the initial time {}",
            initial.time
        )));
    }
    let mut series = FunctionalSeries::new();
    let mut field = initial.clone();
    let t0 = field.time;
    let h = field.domain().hx();
    let lock_steps = ((t_end - t0) / h - 1e-9).ceil().max(1.0) as usize;
    let mut cadence = Cadence::new(t0, monitors.every_t());
    monitors.sample(&field, &mut series)?;
    cadence.mark(t0);

    let mut steps = 0usize;
    let mut status = RunStatus::Completed;
    loop {
        let finished = match cfg.dt_mode {
            DtMode::LockStep => steps >= lock_steps,
            DtMode::Free => field.time >= t_end - 1e-12 * t_end.abs().max(1.0),
        };
        if finished {
            break;
        }
        let sup = field.sup_norm();
        if sup.infinite || field.is_diverged() {
            status = RunStatus::Diverged;
            break;
        }
        let allowed = cfg.admissible_dt(sup.value);
        let (dt, sub) = match cfg.dt_mode {
            DtMode::LockStep => {
                let sub = subcycles(cfg, h, allowed);
                if h / sub as f64 / 2.0 < DT_UNDERFLOW {
                    status = RunStatus::DtUnderflow;
                    break;
                }
                (h, sub)
            }
            DtMode::Free => {
                let mut dt = cfg.dt_max;
                while dt > allowed && dt >= DT_UNDERFLOW {
                    dt *= 0.5;
                }
                if dt < DT_UNDERFLOW {
                    status = RunStatus::DtUnderflow;
                    break;
                }
                let next = cadence.next_time();
                if next > field.time {
                    dt = dt.min(next - field.time);
                }
                (dt.min(t_end - field.time), 1)
            }
        };
        field = step_unchecked(&field, model, cfg, dt, sub);
        steps += 1;
        field.time = match cfg.dt_mode {
            DtMode::LockStep => t0 + steps as f64 * h,
            DtMode::Free => cadence.snap(field.time, t_end),
        };
        if field.is_diverged() {
            status = RunStatus::Diverged;
            break;
        }
        if cadence.due(field.time) {
            monitors.sample(&field, &mut series)?;
            cadence.mark(field.time);
        }
    }
    if cadence.last_sampled != Some(field.time) {
        monitors.sample(&field, &mut series)?;
    }
    Ok(RunOutput {
        field,
        series,
        status,
        steps,
        final_residual: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Boundary, Domain};

    fn periodic(n: usize) -> Domain {
        Domain::square(1.0, n, Boundary::Periodic).unwrap()
    }

    /// Independent Heun integrator for `a' = b^2 - a^2`, `b' = a^2 - b^2`.
    fn heun_pair(a: f64, b: f64, h: f64) -> (f64, f64) {
        let f = |a: f64, b: f64| b * b - a * a;
        let k1 = f(a, b);
        let (am, bm) = (a + h * k1, b - h * k1);
        let k2 = f(am, bm);
        (a + 0.5 * h * (k1 + k2), b - 0.5 * h * (k1 + k2))
    }

    #[test]
    fn uniform_step_matches_scalar_ode() {
        let m = VelocityModel::broadwell2d();
        let cfg = PhysicalStepConfig {
            dt_mode: DtMode::Free,
            ..Default::default()
        };
        let f = Field::uniform(periodic(8), &[1.0, 2.0, 1.0, 2.0]);
        let out = step_physical(&f, &m, &cfg, 0.01).unwrap();
        let (a, b) = heun_pair(1.0, 2.0, 0.005);
        let (a, b) = heun_pair(a, b, 0.005);
        for iy in 0..8 {
            for ix in 0..8 {
                let c = out.cell(ix, iy);
                assert!((c[0] - a).abs() < 1e-14 && (c[1] - b).abs() < 1e-14);
                assert_eq!(c[0], out.get(0, 0, 0));
            }
        }
    }

    #[test]
    fn lockstep_without_collisions_is_a_permutation() {
        let m = VelocityModel::broadwell2d().without_collisions();
        let d = periodic(16);
        let f = Field::random_smoothed(d, 4, 1.0, 3, 0);
        let out = step_physical(&f, &m, &PhysicalStepConfig::default(), d.hx()).unwrap();
        for iy in 0..16 {
            for ix in 0..16 {
                for (s, c) in m.speeds().iter().enumerate() {
                    let jx = (ix as i64 - c[0] as i64).rem_euclid(16) as usize;
                    let jy = (iy as i64 - c[1] as i64).rem_euclid(16) as usize;
                    assert_eq!(out.get(s, ix, iy).to_bits(), f.get(s, jx, jy).to_bits());
                }
            }
        }
    }

    #[test]
    fn disjoint_supports_advect_only() {
        let m = VelocityModel::broadwell2d();
        let d = periodic(16);
        let f = Field::from_fn(d, 4, |s, x, _| match s {
            0 if x < -0.5 => 1.0,
            2 if x > 0.5 => 1.0,
            _ => 0.0,
        });
        let with = step_physical(&f, &m, &PhysicalStepConfig::default(), d.hx()).unwrap();
        let without = step_physical(
            &f,
            &m.without_collisions(),
            &PhysicalStepConfig::default(),
            d.hx(),
        )
        .unwrap();
        assert_eq!(with.data(), without.data());
    }

    #[test]
    fn free_mode_refuses_large_steps() {
        let m = VelocityModel::broadwell2d();
        let f = Field::uniform(periodic(8), &[4.0, 0.0, 4.0, 0.0]);
        let cfg = PhysicalStepConfig {
            dt_mode: DtMode::Free,
            ..Default::default()
        };
        match step_physical(&f, &m, &cfg, 0.5) {
            Err(Error::Cfl { required, .. }) => assert_eq!(required, 0.125),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lockstep_rejects_wrong_dt_and_bad_models() {
        let d = periodic(8);
        let f = Field::zeros(d, 4);
        let m = VelocityModel::broadwell2d();
        assert!(step_physical(&f, &m, &PhysicalStepConfig::default(), 0.1).is_err());
        let mut coeffs = vec![0.0; 64];
        coeffs[0] = 1.0;
        let bad = VelocityModel::new(m.speeds().to_vec(), coeffs, None).unwrap();
        assert!(matches!(
            step_physical(&f, &bad, &PhysicalStepConfig::default(), d.hx()),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn zero_data_run() {
        let m = VelocityModel::broadwell2d();
        let f = Field::zeros(periodic(8), 4);
        let mut mon = Monitors::new(0.25);
        let out = run_physical(&f, &m, &PhysicalStepConfig::default(), 1.0, &mut mon).unwrap();
        assert_eq!(out.status, RunStatus::Completed);
        assert!(out.field.data().iter().all(|&v| v == 0.0));
        assert!((out.field.time - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monitors_fire_on_cadence() {
        let m = VelocityModel::broadwell2d();
        let f = Field::uniform(periodic(8), &[1.0, 2.0, 1.0, 2.0]);
        let cfg = PhysicalStepConfig {
            dt_mode: DtMode::Free,
            dt_max: 0.03,
            ..Default::default()
        };
        let mut times = Vec::new();
        let mut mon = Monitors::new(0.1).with(|f: &Field, _: &mut FunctionalSeries| {
            times.push(f.time);
            Ok(())
        });
        run_physical(&f, &m, &cfg, 0.5, &mut mon).unwrap();
        drop(mon);
        assert_eq!(times.len(), 6);
        for (k, t) in times.iter().enumerate() {
            assert!((t - 0.1 * k as f64).abs() < 1e-12, "{times:?}");
        }
    }

    #[test]
    fn exact_integrator_matches_closed_form() {
        // a + b = 3 makes a' = 3 (3 - 2a) linear: a(t) = 1.5 - 0.5 exp(-6t)
        let m = VelocityModel::broadwell2d();
        let cfg = PhysicalStepConfig {
            dt_mode: DtMode::Free,
            collision_integrator: CollisionIntegrator::ExactPairExchange,
            dt_max: 0.05,
            density_cfl: 1.0,
            ..Default::default()
        };
        let f = Field::uniform(periodic(4), &[1.0, 2.0, 1.0, 2.0]);
        let out = run_physical(&f, &m, &cfg, 1.0, &mut Monitors::new(0.0)).unwrap();
        let want = 1.5 - 0.5 * (-6.0f64).exp();
        assert!((out.field.get(0, 0, 0) - want).abs() < 1e-13);
    }
}
