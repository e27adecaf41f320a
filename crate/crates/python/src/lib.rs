//! Python bindings: fields, the two solvers, line functionals and the
//! blow-up estimators. Arrays cross the boundary as flat lists in the
//! `(row, column, species)` layout of the core crate.

use broadwell::blowup;
use broadwell::functionals::{
    self, check_series, MonitorKind, RescaledProbe, Theorem1Params, Theorem2Params,
};
use broadwell::model::VelocityModel;
use broadwell::solver::{self, Probe};
use broadwell::{
    Boundary, Domain, DtMode, FunctionalSeries, Monitors, PhysicalStepConfig, RescaledStepConfig,
};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: broadwell::Error) -> PyErr {
    match e {
        broadwell::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        broadwell::Error::Cfl { .. } | broadwell::Error::NonContraction { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn boundary(name: &str) -> PyResult<Boundary> {
    match name {
        "periodic" => Ok(Boundary::Periodic),
        "outflow" => Ok(Boundary::Outflow),
        other => Err(PyValueError::new_err(format!("unknown boundary `{other}`"))),
    }
}

/// Four-species field on a square grid.
#[pyclass(name = "Field", module = "broadwell_py", skip_from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: broadwell::Field,
}

#[pymethods]
impl PyField {
    /// Smoothed uniform noise in `[0, amplitude]` on `[-half_width, half_width]^2`.
    #[staticmethod]
    #[pyo3(signature = (n, amplitude, seed, half_width = 1.0, boundary = "periodic", smoothing_passes = 1))]
    fn random(
        n: usize,
        amplitude: f64,
        seed: u64,
        half_width: f64,
        boundary: &str,
        smoothing_passes: usize,
    ) -> PyResult<Self> {
        let d = Domain::square(half_width, n, self::boundary(boundary)?).map_err(to_py)?;
        Ok(Self {
            inner: broadwell::Field::random_smoothed(d, 4, amplitude, seed, smoothing_passes),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, values, half_width = 1.0, boundary = "periodic"))]
    fn uniform(n: usize, values: [f64; 4], half_width: f64, boundary: &str) -> PyResult<Self> {
        let d = Domain::square(half_width, n, self::boundary(boundary)?).map_err(to_py)?;
        Ok(Self {
            inner: broadwell::Field::uniform(d, &values),
        })
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time
    }

    #[setter]
    fn set_time(&mut self, t: f64) {
        self.inner.time = t;
    }

    /// `(ny, nx, species)`.
    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        let d = self.inner.domain();
        (d.ny, d.nx, self.inner.nspecies())
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.inner.domain().xmax
    }

    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn get(&self, species: usize, ix: usize, iy: usize) -> PyResult<f64> {
        let d = self.inner.domain();
        if species >= self.inner.nspecies() || ix >= d.nx || iy >= d.ny {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.get(species, ix, iy))
    }

    /// `(value, species, x, y)` of the largest entry.
    fn sup(&self) -> (f64, usize, f64, f64) {
        let s = self.inner.sup_norm();
        (s.value, s.species, s.location[0], s.location[1])
    }

    fn total(&self, species: usize) -> PyResult<f64> {
        if species >= self.inner.nspecies() {
            return Err(PyValueError::new_err("species out of range"));
        }
        Ok(self.inner.total(species))
    }

    fn sup_distance(&self, other: &PyField) -> f64 {
        self.inner.sup_distance(&other.inner)
    }

    fn __repr__(&self) -> String {
        let (ny, nx, n) = self.shape();
        format!("Field({nx}x{ny}, {n} species, t={})", self.inner.time)
    }
}

type Records = Vec<(f64, String, f64, Option<f64>)>;

fn records(series: &FunctionalSeries) -> Records {
    series
        .records()
        .iter()
        .map(|r| (r.time, r.name.clone(), r.value, r.bound))
        .collect()
}

/// Collision right-hand side of the Broadwell model at one point.
#[pyfunction]
fn collision_rhs(u: [f64; 4]) -> PyResult<Vec<f64>> {
    Ok(VelocityModel::broadwell2d()
        .collision_rhs(&u)
        .map_err(to_py)?
        .rates)
}

/// Advances one point of the homogeneous exchange by `h`, exactly.
#[pyfunction]
fn exact_pair_exchange(mut u: [f64; 4], h: f64) -> [f64; 4] {
    solver::exact_pair_exchange(&mut u, h);
    u
}

/// Runs the physical system to `t_end`. Returns the final field and the
/// `(time, name, value, bound)` records sampled every `every_t`.
#[pyfunction]
#[pyo3(signature = (field, t_end, every_t = 0.1, dt_mode = "lockstep", dt_max = 0.01, collisions = true))]
fn run_physical(
    py: Python<'_>,
    field: &PyField,
    t_end: f64,
    every_t: f64,
    dt_mode: &str,
    dt_max: f64,
    collisions: bool,
) -> PyResult<(PyField, Records, String)> {
    let dt_mode = match dt_mode {
        "lockstep" => DtMode::LockStep,
        "free" => DtMode::Free,
        other => return Err(PyValueError::new_err(format!("unknown dt_mode `{other}`"))),
    };
    let cfg = PhysicalStepConfig {
        dt_mode,
        dt_max,
        ..Default::default()
    };
    let model = VelocityModel::broadwell2d();
    let model = if collisions {
        model
    } else {
        model.without_collisions()
    };
    let init = field.inner.clone();
    let out = py
        .detach(move || {
            let mut probe = functionals::PhysicalProbe::new(model.speeds());
            let mut mon = Monitors::new(every_t)
                .with(move |f: &broadwell::Field, s: &mut FunctionalSeries| probe.sample(f, s));
            solver::run_physical(&init, &model, &cfg, t_end, &mut mon)
        })
        .map_err(to_py)?;
    Ok((
        PyField { inner: out.field },
        records(&out.series),
        out.status.to_string(),
    ))
}

/// Runs the rescaled system to `t_end`, monitoring the line functionals.
/// With `kappa` the decay bounds are attached, with `theta` the growth
/// bounds. Returns the final field, the records and whether every bound held.
#[pyfunction]
#[pyo3(signature = (field, t_end, every_t = 0.5, dt = 0.05, kappa = None, theta = None, cap = false))]
#[allow(clippy::too_many_arguments)]
fn run_rescaled(
    py: Python<'_>,
    field: &PyField,
    t_end: f64,
    every_t: f64,
    dt: f64,
    kappa: Option<f64>,
    theta: Option<f64>,
    cap: bool,
) -> PyResult<(PyField, Records, bool)> {
    let mut kinds = vec![MonitorKind::Sup, MonitorKind::Lines, MonitorKind::Mass];
    let mut probe_thm1 = None;
    let mut probe_thm2 = None;
    if let Some(k) = kappa {
        kinds.extend([MonitorKind::Q14Thm1, MonitorKind::Moving]);
        probe_thm1 = Some(Theorem1Params::new(k).map_err(to_py)?);
    }
    if let Some(th) = theta {
        kinds.push(MonitorKind::Q14Thm2);
        probe_thm2 = Some(Theorem2Params::new(th).map_err(to_py)?);
    }
    if cap && theta.is_none() {
        return Err(PyValueError::new_err("cap needs theta"));
    }
    let cfg = RescaledStepConfig {
        dt,
        half_width: field.half_width(),
        log_cap: if cap { theta } else { None },
        ..Default::default()
    };
    let init = field.inner.clone();
    let out = py
        .detach(move || {
            let mut probe = RescaledProbe::new(&kinds);
            if let Some(p) = probe_thm1 {
                probe = probe.with_thm1(p);
            }
            if let Some(p) = probe_thm2 {
                probe = probe.with_thm2(p);
            }
            let mut mon = Monitors::new(every_t)
                .with(move |f: &broadwell::Field, s: &mut FunctionalSeries| probe.sample(f, s));
            solver::run_rescaled(&init, &cfg, t_end, &mut mon)
        })
        .map_err(to_py)?;
    let ok = check_series(&out.series).ok();
    Ok((PyField { inner: out.field }, records(&out.series), ok))
}

/// `(t0, A0)` of the logarithmic growth regime.
#[pyfunction]
fn growth_constants(theta: f64) -> PyResult<(f64, f64)> {
    let p = Theorem2Params::new(theta).map_err(to_py)?;
    Ok((p.t0, p.a0))
}

#[pyfunction]
fn decay_comparison(kappa: f64, t: f64) -> PyResult<f64> {
    Ok(functionals::comparison_ode_thm1(
        &Theorem1Params::new(kappa).map_err(to_py)?,
        t,
    ))
}

#[pyfunction]
fn growth_line_bound(theta: f64, t: f64) -> PyResult<f64> {
    Ok(functionals::line_bound_49(
        &Theorem2Params::new(theta).map_err(to_py)?,
        t,
    ))
}

#[pyfunction]
fn weight_inequality_check(k: f64, samples: usize) -> PyResult<f64> {
    functionals::weight_inequality_check(k, samples).map_err(to_py)
}

/// `(t_star, r_squared)` from `(t, sup)` samples.
#[pyfunction]
fn estimate_tstar(samples: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    blowup::estimate_tstar(&samples).map_err(to_py)
}

#[pyfunction]
fn corollary_ratio(s: f64, t: f64, t_star: f64) -> PyResult<f64> {
    blowup::corollary_ratio(s, t, t_star).map_err(to_py)
}

#[pymodule]
fn broadwell_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(collision_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(exact_pair_exchange, m)?)?;
    m.add_function(wrap_pyfunction!(run_physical, m)?)?;
    m.add_function(wrap_pyfunction!(run_rescaled, m)?)?;
    m.add_function(wrap_pyfunction!(growth_constants, m)?)?;
    m.add_function(wrap_pyfunction!(decay_comparison, m)?)?;
    m.add_function(wrap_pyfunction!(growth_line_bound, m)?)?;
    m.add_function(wrap_pyfunction!(weight_inequality_check, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_tstar, m)?)?;
    m.add_function(wrap_pyfunction!(corollary_ratio, m)?)?;
    Ok(())
}
