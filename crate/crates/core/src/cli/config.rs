//! Run configuration: TOML text, command-line overrides, defaults per mode.
//!
//! Grammar (every key optional except `mode`):
//!
//! ```toml
//! mode = "verify-thm1"   # physical | rescaled | verify-thm1 | verify-thm2
//!                        # | scenario | blowup-scan | picard-check
//! seed = 7
//! out_dir = "out"
//! t_end = 10.0
//! kappa = 1.0            # bound on the initial data
//! theta = 0.2            # logarithmic growth rate, must be < 1/4
//! monitors = ["sup", "q14_thm1", "lines", "mass", "moving"]   # or "sup,mass"
//!
//! [grid]      n, nx, ny, half_width, boundary = "periodic" | "outflow"
//! [initial]   kind = "random" | "uniform" | "zero" | "packets",
//!             amplitude, smoothing_passes, values = [u1, u2, u3, u4]
//! [physical]  dt_mode = "lockstep" | "free", collision = "rk2" | "exact",
//!             dt_max, density_cfl, interpolation = "bilinear" | "cubic",
//!             collisions = true, model_file = "model.txt"
//! [rescaled]  L, dt, collision, interpolation, cap = true
//! [output]    every_t, snap_every_t, snapshots = true
//! [picard]    horizon, tol, max_iters, substeps
//! [scenario]  inner_square_halfwidth, background
//! [[packet]]  species, center = [x, y], widths = [a, b], amplitude,
//!             shape = "smooth_bump" | "box"
//! [blowup]    rate_constant = 0.25
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::blowup::COROLLARY_RATE;
use crate::error::{Error, Result};
use crate::fields::{Boundary, Interpolation};
use crate::functionals::{MonitorKind, Theorem2Params};
use crate::scenario::{PacketShape, PacketSpec, ScenarioConfig};
use crate::solver::{
    CollisionIntegrator, DtMode, PhysicalStepConfig, PicardConfig, RescaledStepConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Physical,
    Rescaled,
    VerifyThm1,
    VerifyThm2,
    Scenario,
    BlowupScan,
    PicardCheck,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Physical => "physical",
            Mode::Rescaled => "rescaled",
            Mode::VerifyThm1 => "verify-thm1",
            Mode::VerifyThm2 => "verify-thm2",
            Mode::Scenario => "scenario",
            Mode::BlowupScan => "blowup-scan",
            Mode::PicardCheck => "picard-check",
        }
    }

    pub fn is_rescaled(self) -> bool {
        matches!(self, Mode::Rescaled | Mode::VerifyThm1 | Mode::VerifyThm2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Random,
    Uniform,
    Zero,
    Packets,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum BoundaryName {
    Periodic,
    Outflow,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum DtModeName {
    Lockstep,
    Free,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum CollisionName {
    Rk2,
    Exact,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum InterpolationName {
    Bilinear,
    Cubic,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum ShapeName {
    Box,
    SmoothBump,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MonitorList {
    Text(String),
    List(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Mode,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    t_end: Option<f64>,
    kappa: Option<f64>,
    theta: Option<f64>,
    monitors: Option<MonitorList>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    physical: RawPhysical,
    #[serde(default)]
    rescaled: RawRescaled,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    picard: RawPicard,
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    packet: Vec<RawPacket>,
    #[serde(default)]
    blowup: RawBlowup,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Option<usize>,
    nx: Option<usize>,
    ny: Option<usize>,
    half_width: Option<f64>,
    boundary: Option<BoundaryName>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    kind: Option<InitialKind>,
    amplitude: Option<f64>,
    smoothing_passes: Option<usize>,
    values: Option<Vec<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPhysical {
    dt_mode: Option<DtModeName>,
    collision: Option<CollisionName>,
    dt_max: Option<f64>,
    density_cfl: Option<f64>,
    interpolation: Option<InterpolationName>,
    collisions: Option<bool>,
    model_file: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRescaled {
    #[serde(rename = "L")]
    half_width: Option<f64>,
    dt: Option<f64>,
    collision: Option<CollisionName>,
    interpolation: Option<InterpolationName>,
    cap: Option<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    every_t: Option<f64>,
    snap_every_t: Option<f64>,
    snapshots: Option<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPicard {
    horizon: Option<f64>,
    tol: Option<f64>,
    max_iters: Option<usize>,
    substeps: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    inner_square_halfwidth: Option<f64>,
    background: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPacket {
    species: usize,
    center: [f64; 2],
    widths: [f64; 2],
    amplitude: f64,
    shape: Option<ShapeName>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawBlowup {
    rate_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    /// Half width of the physical domain; rescaled modes use `rescaled.L`.
    pub half_width: f64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub smoothing_passes: usize,
    pub values: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub every_t: f64,
    pub snap_every_t: Option<f64>,
    pub snapshots: bool,
}

/// Fully validated configuration with all defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub t_end: f64,
    pub kappa: f64,
    /// Set when `kappa` was given explicitly (enables the decay bounds in
    /// plain rescaled runs).
    pub kappa_explicit: bool,
    pub theta: Option<f64>,
    pub monitors: Vec<MonitorKind>,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    pub physical: PhysicalStepConfig,
    pub collisions: bool,
    pub model_file: Option<PathBuf>,
    pub rescaled: RescaledStepConfig,
    pub output: OutputConfig,
    pub picard: PicardConfig,
    pub scenario: ScenarioConfig,
    pub blowup_rate: f64,
}

/// Reads and validates a configuration file. `overrides` are `key=value`
/// strings with dotted keys, applied before validation.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        Error::config("<file>", e.to_string().trim_end().to_string())
    })?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let raw: RawConfig =
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let key = e.path().to_string();
            Error::config(
                if key == "." {
                    "<root>".to_string()
                } else {
                    key
                },
                e.into_inner().to_string().trim_end().to_string(),
            )
        })?;
    resolve(raw)
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(spec, "override must have the form key=value"))?;
    let key = key.trim();
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "empty key segment in override"));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(
            key,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn collision(c: Option<CollisionName>) -> CollisionIntegrator {
    match c {
        Some(CollisionName::Exact) => CollisionIntegrator::ExactPairExchange,
        _ => CollisionIntegrator::Rk2,
    }
}

fn interpolation(i: Option<InterpolationName>) -> Interpolation {
    match i {
        Some(InterpolationName::Cubic) => Interpolation::Cubic,
        _ => Interpolation::Bilinear,
    }
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let mode = raw.mode;

    let kappa = positive("kappa", raw.kappa.unwrap_or(1.0))?;
    let theta = match raw.theta {
        Some(t) if !(t > 0.0 && t < 0.25) => {
            return Err(Error::config(
                "theta",
                format!("must satisfy 0 < theta < 1/4, got {t}"),
            ))
        }
        t => t,
    };
    if mode == Mode::VerifyThm2 && theta.is_none() {
        return Err(Error::config("theta", "verify-thm2 requires theta"));
    }
    let thm2 = theta.map(Theorem2Params::new).transpose()?;

    // grid
    let default_n = if mode == Mode::PicardCheck { 80 } else { 256 };
    let n = raw.grid.n.unwrap_or(default_n);
    let nx = raw.grid.nx.unwrap_or(n);
    let ny = raw.grid.ny.unwrap_or(n);
    if nx < 4 || ny < 4 {
        return Err(Error::config(
            "grid",
            format!("need at least 4 cells per axis, got {nx} x {ny}"),
        ));
    }
    if mode.is_rescaled() && (raw.grid.half_width.is_some() || raw.grid.boundary.is_some()) {
        return Err(Error::config(
            "grid",
            "rescaled modes use the outflow square [-L, L]^2; set rescaled.L instead of grid.half_width/boundary",
        ));
    }
    let grid = GridConfig {
        nx,
        ny,
        half_width: positive("grid.half_width", raw.grid.half_width.unwrap_or(1.0))?,
        boundary: match raw.grid.boundary {
            Some(BoundaryName::Outflow) => Boundary::Outflow,
            Some(BoundaryName::Periodic) | None if !mode.is_rescaled() => Boundary::Periodic,
            _ => Boundary::Outflow,
        },
    };

    // initial data
    let kind = raw.initial.kind.unwrap_or(match mode {
        Mode::Scenario | Mode::BlowupScan => InitialKind::Packets,
        _ => InitialKind::Random,
    });
    let default_amp = match mode {
        Mode::VerifyThm2 => thm2.map_or(kappa, |p| kappa.min(p.theta * p.t0.ln())),
        Mode::PicardCheck => 0.2,
        _ => kappa,
    };
    let amplitude = raw.initial.amplitude.unwrap_or(default_amp);
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::config(
            "initial.amplitude",
            format!("must be non-negative, got {amplitude}"),
        ));
    }
    let values = match &raw.initial.values {
        None => [0.0; 4],
        Some(v) => {
            let arr: [f64; 4] = v.clone().try_into().map_err(|_| {
                Error::config("initial.values", format!("need 4 values, got {}", v.len()))
            })?;
            if arr.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(Error::config(
                    "initial.values",
                    "values must be non-negative",
                ));
            }
            arr
        }
    };
    if kind == InitialKind::Uniform && raw.initial.values.is_none() {
        return Err(Error::config(
            "initial.values",
            "uniform initial data needs 4 values",
        ));
    }
    let initial = InitialConfig {
        kind,
        amplitude,
        smoothing_passes: raw.initial.smoothing_passes.unwrap_or(1),
        values,
    };

    // physical solver
    let mut physical = PhysicalStepConfig {
        dt_mode: match raw.physical.dt_mode {
            Some(DtModeName::Free) => DtMode::Free,
            Some(DtModeName::Lockstep) => DtMode::LockStep,
            None => match mode {
                Mode::BlowupScan => DtMode::Free,
                _ => DtMode::LockStep,
            },
        },
        collision_integrator: collision(raw.physical.collision),
        interpolation: interpolation(raw.physical.interpolation),
        ..Default::default()
    };
    let h = 2.0 * grid.half_width / nx as f64;
    physical.dt_max = positive(
        "physical.dt_max",
        raw.physical.dt_max.unwrap_or(physical.dt_max),
    )?;
    if let Some(c) = raw.physical.density_cfl {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::config(
                "physical.density_cfl",
                format!("must lie in (0, 1], got {c}"),
            ));
        }
        physical.density_cfl = c;
    }

    // rescaled solver
    let cap = raw.rescaled.cap.unwrap_or(mode == Mode::VerifyThm2);
    if cap && theta.is_none() {
        return Err(Error::config(
            "rescaled.cap",
            "the logarithmic cap needs theta",
        ));
    }
    let rescaled = RescaledStepConfig {
        dt: positive("rescaled.dt", raw.rescaled.dt.unwrap_or(0.05))?,
        half_width: {
            let l = raw.rescaled.half_width.unwrap_or(3.0);
            if !(l > 1.0 && l.is_finite()) {
                return Err(Error::config(
                    "rescaled.L",
                    format!("must exceed 1, got {l}"),
                ));
            }
            l
        },
        collision_integrator: collision(raw.rescaled.collision),
        interpolation: interpolation(raw.rescaled.interpolation),
        log_cap: if cap { theta } else { None },
    };

    // times
    let t_start = match (mode, thm2) {
        (Mode::VerifyThm2, Some(p)) => p.t0,
        _ => 0.0,
    };
    let mut picard = PicardConfig::default();
    if let Some(v) = raw.picard.horizon {
        picard.horizon = positive("picard.horizon", v)?;
    }
    if let Some(v) = raw.picard.tol {
        picard.tol = positive("picard.tol", v)?;
    }
    if let Some(v) = raw.picard.max_iters {
        if v == 0 {
            return Err(Error::config("picard.max_iters", "must be at least 1"));
        }
        picard.max_iters = v;
    }
    match raw.picard.substeps {
        Some(v) if v < 8 => {
            return Err(Error::config(
                "picard.substeps",
                format!("must be at least 8, got {v}"),
            ))
        }
        Some(v) => picard.substeps = v,
        // one grid cell per quadrature interval keeps every shift exact
        None if mode == Mode::PicardCheck => {
            picard.substeps = ((picard.horizon / h).round() as usize).max(8)
        }
        None => {}
    }
    let t_end = match raw.t_end {
        Some(t) => t,
        None => match mode {
            Mode::Physical | Mode::BlowupScan => 1.0,
            Mode::Rescaled | Mode::VerifyThm1 => 10.0,
            Mode::VerifyThm2 => 3.0 * t_start,
            Mode::Scenario => 0.8,
            Mode::PicardCheck => picard.horizon,
        },
    };
    if !(t_end > t_start && t_end.is_finite()) {
        return Err(Error::config(
            "t_end",
            format!("must exceed the start time {t_start}, got {t_end}"),
        ));
    }

    let every_t = match raw.output.every_t {
        Some(v) if v < 0.0 || !v.is_finite() => {
            return Err(Error::config(
                "output.every_t",
                format!("must be non-negative, got {v}"),
            ))
        }
        Some(v) => v,
        None => match mode {
            Mode::Physical | Mode::Scenario => 0.1,
            Mode::Rescaled | Mode::VerifyThm1 => 0.5,
            Mode::VerifyThm2 => 1.0,
            Mode::BlowupScan => (t_end - t_start) / 100.0,
            Mode::PicardCheck => 0.0,
        },
    };
    let snap_every_t = match raw.output.snap_every_t {
        Some(v) => Some(positive("output.snap_every_t", v)?),
        None => None,
    };

    // monitors
    let monitors = match raw.monitors {
        Some(MonitorList::Text(s)) => s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<MonitorKind>>>()?,
        Some(MonitorList::List(v)) => v
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<MonitorKind>>>()?,
        None => {
            use MonitorKind::*;
            match mode {
                Mode::VerifyThm1 => vec![Sup, Q14Thm1, Mass, Lines, Moving],
                Mode::VerifyThm2 => vec![Sup, Q14Thm2, Lines],
                _ => {
                    let mut m = vec![Sup, Mass, Lines];
                    if raw.kappa.is_some() {
                        m.push(Q14Thm1);
                    }
                    if theta.is_some() {
                        m.push(Q14Thm2);
                    }
                    m
                }
            }
        }
    };
    if monitors.contains(&MonitorKind::Q14Thm2) && theta.is_none() {
        return Err(Error::config("monitors", "q14_thm2 needs theta"));
    }

    // scenario
    let mut scenario = ScenarioConfig::default();
    if let Some(q) = raw.scenario.inner_square_halfwidth {
        scenario.inner_square_halfwidth = q;
    }
    if let Some(b) = raw.scenario.background {
        scenario.background = b;
    }
    if !raw.packet.is_empty() {
        scenario.packets = raw
            .packet
            .iter()
            .enumerate()
            .map(|(i, p)| {
                PacketSpec::new(
                    p.species,
                    p.center,
                    p.widths,
                    p.amplitude,
                    match p.shape {
                        Some(ShapeName::Box) => PacketShape::Box,
                        _ => PacketShape::SmoothBump,
                    },
                )
                .map_err(|e| Error::config(format!("packet[{i}]"), e.to_string()))
            })
            .collect::<Result<_>>()?;
    }
    scenario
        .validate()
        .map_err(|e| Error::config("scenario", e.to_string()))?;

    let blowup_rate = positive(
        "blowup.rate_constant",
        raw.blowup.rate_constant.unwrap_or(COROLLARY_RATE),
    )?;

    Ok(RunConfig {
        mode,
        seed: raw.seed.unwrap_or(0),
        out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        t_end,
        kappa,
        kappa_explicit: raw.kappa.is_some(),
        theta,
        monitors,
        grid,
        initial,
        physical,
        collisions: raw.physical.collisions.unwrap_or(true),
        model_file: raw.physical.model_file,
        rescaled,
        output: OutputConfig {
            every_t,
            snap_every_t,
            snapshots: raw.output.snapshots.unwrap_or(true),
        },
        picard,
        scenario,
        blowup_rate,
    })
}
