//! Preset execution and output files.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use clap::Parser;

use super::config::{parse_config, InitialKind, Mode, RunConfig};
use crate::blowup::{analyze_blowup, write_blowup_report, ReportRow};
use crate::error::{Error, Result};
use crate::fields::{write_snapshot, Boundary, Domain, Field};
use crate::functionals::{
    check_series, CheckReport, FunctionalSeries, PhysicalProbe, RescaledProbe, Theorem1Params,
    Theorem2Params,
};
use crate::model::VelocityModel;
use crate::scenario::{scenario_fig3, CentroidTracker};
use crate::solver::{
    picard_solve, run_physical, run_rescaled, Monitors, Probe, RunOutput, RunStatus,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Largest endpoint difference accepted by `picard-check`.
pub const PICARD_AGREEMENT: f64 = 1e-3;

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "broadwell",
    about = "Broadwell model solvers and functional monitors"
)]
struct Args {
    /// Configuration file (TOML).
    config: PathBuf,
    /// Output directory, replacing `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random initial data, replacing `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// `key=value` assignments applied on top of the file; dotted keys
    /// address tables, e.g. `rescaled.dt=0.02`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Entry point of the `broadwell` binary; returns the process exit code.
pub fn main_entry(args: impl IntoIterator<Item = OsString>) -> i32 {
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SOLVER } else { EXIT_OK };
        }
    };
    let mut cfg = match parse_config(&args.config, &args.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let threads = match std::env::var("BROADWELL_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Some(n),
            _ => {
                eprintln!("error: BROADWELL_THREADS must be a positive integer, got `{v}`");
                return EXIT_SOLVER;
            }
        },
        Err(_) => None,
    };
    match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cfg)),
            Err(e) => {
                eprintln!("error: cannot start {n} worker threads: {e}");
                EXIT_SOLVER
            }
        },
        None => run(&cfg),
    }
}

/// Exclusive claim on an output directory, released on drop.
struct OutputLock(PathBuf);

impl OutputLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::config(
                "out_dir",
                format!(
                    "{} is in use by another run (remove {} if stale)",
                    dir.display(),
                    path.display()
                ),
            )),
            Err(e) => Err(Error::io(path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// `key = value` lines of `summary.txt`.
#[derive(Debug, Default)]
struct Summary(Vec<(String, String)>);

impl Summary {
    fn set(&mut self, key: &str, value: impl ToString) {
        let v = value.to_string().replace('\n', " ");
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.0.push((key.to_string(), v)),
        }
    }

    fn add(&mut self, key: &str, value: impl ToString) {
        self.0
            .push((key.to_string(), value.to_string().replace('\n', " ")));
    }

    fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Executes a validated configuration, writing `series.csv`, snapshots and
/// `summary.txt` into the output directory. Returns the exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let dir = &cfg.out_dir;
    if let Err(e) = fs::create_dir_all(dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_IO;
    }
    let _lock = match OutputLock::acquire(dir) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let mut summary = Summary::default();
    summary.set("mode", cfg.mode.name());
    summary.set("seed", cfg.seed);
    let code = match dispatch(cfg, &mut summary) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            summary.set("status", "Failed");
            summary.set("error", &e);
            exit_code_for(&e)
        }
    };
    let series_path = dir.join("series.csv");
    let mut code = code;
    if !series_path.exists() {
        if let Err(e) = FunctionalSeries::new().write_csv(&series_path) {
            eprintln!("error: {e}");
            code = EXIT_IO;
        }
    }
    summary.set("exit_code", code);
    let path = dir.join("summary.txt");
    if let Err(e) = fs::write(&path, summary.render()) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return EXIT_IO;
    }
    code
}

fn dispatch(cfg: &RunConfig, summary: &mut Summary) -> Result<i32> {
    match cfg.mode {
        Mode::Physical => physical(cfg, summary),
        Mode::Rescaled | Mode::VerifyThm1 | Mode::VerifyThm2 => rescaled(cfg, summary),
        Mode::Scenario => scenario(cfg, summary),
        Mode::BlowupScan => blowup_scan(cfg, summary),
        Mode::PicardCheck => picard_check(cfg, summary),
    }
}

fn physical_domain(cfg: &RunConfig) -> Result<Domain> {
    let l = cfg.grid.half_width;
    Domain::new(
        (-l, l),
        (-l, l),
        cfg.grid.nx,
        cfg.grid.ny,
        cfg.grid.boundary,
    )
}

fn initial_field(cfg: &RunConfig, domain: Domain, summary: &mut Summary) -> Result<Field> {
    let i = &cfg.initial;
    Ok(match i.kind {
        InitialKind::Random => {
            Field::random_smoothed(domain, 4, i.amplitude, cfg.seed, i.smoothing_passes)
        }
        InitialKind::Uniform => Field::uniform(domain, &i.values),
        InitialKind::Zero => Field::zeros(domain, 4),
        InitialKind::Packets => {
            let (f, warnings) = scenario_fig3(&cfg.scenario, domain)?;
            for w in warnings {
                summary.add("warning", w);
            }
            f
        }
    })
}

fn model(cfg: &RunConfig) -> Result<VelocityModel> {
    let m = match &cfg.model_file {
        Some(p) => VelocityModel::from_file(p)?,
        None => VelocityModel::broadwell2d(),
    };
    Ok(if cfg.collisions {
        m
    } else {
        m.without_collisions()
    })
}

fn snapshot_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let d = cfg.out_dir.join("snapshots");
    fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    Ok(d)
}

/// Probe writing snapshots every `snap_every_t`.
fn snapshot_probe(
    dir: PathBuf,
    every: f64,
    start: f64,
) -> impl FnMut(&Field, &mut FunctionalSeries) -> Result<()> {
    let mut next = start;
    move |f: &Field, _: &mut FunctionalSeries| {
        if f.time >= next - 1e-9 * every {
            write_snapshot(f, &dir)?;
            while next <= f.time + 1e-9 * every {
                next += every;
            }
        }
        Ok(())
    }
}

fn write_series(cfg: &RunConfig, series: &FunctionalSeries) -> Result<()> {
    series.write_csv(&cfg.out_dir.join("series.csv"))
}

fn record_run(summary: &mut Summary, out: &RunOutput) {
    summary.set("status", out.status);
    summary.set("final_time", out.field.time);
    summary.set("steps", out.steps);
    summary.set("final_sup", out.field.sup_norm().value);
    summary.set("clamped_mass", out.field.clamped_mass());
}

fn record_checks(summary: &mut Summary, checks: &CheckReport) {
    summary.set("bound_checks_passed", checks.passed);
    summary.set("bound_checks_failed", checks.failed());
    for v in checks.violations.iter().take(20) {
        summary.add("violation", v);
    }
}

fn verdict(status: RunStatus, checks: &CheckReport) -> i32 {
    if status != RunStatus::Completed {
        EXIT_SOLVER
    } else if !checks.ok() {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

fn snapshots_around(
    cfg: &RunConfig,
    initial: &Field,
    mon: &mut Monitors<'_>,
) -> Result<Option<PathBuf>> {
    if !cfg.output.snapshots {
        return Ok(None);
    }
    let dir = snapshot_dir(cfg)?;
    write_snapshot(initial, &dir)?;
    if let Some(every) = cfg.output.snap_every_t {
        mon.push(snapshot_probe(dir.clone(), every, initial.time + every));
    }
    Ok(Some(dir))
}

fn physical(cfg: &RunConfig, summary: &mut Summary) -> Result<i32> {
    let model = model(cfg)?;
    let init = initial_field(cfg, physical_domain(cfg)?, summary)?;
    let mut probe = PhysicalProbe::new(model.speeds());
    let mut mon = Monitors::new(cfg.output.every_t)
        .with(|f: &Field, s: &mut FunctionalSeries| probe.sample(f, s));
    let snaps = snapshots_around(cfg, &init, &mut mon)?;
    let out = run_physical(&init, &model, &cfg.physical, cfg.t_end, &mut mon)?;
    drop(mon);
    finish_physical(cfg, summary, &out, snaps.as_deref())?;
    let checks = check_series(&out.series);
    record_checks(summary, &checks);
    Ok(verdict(out.status, &checks))
}

fn finish_physical(
    cfg: &RunConfig,
    summary: &mut Summary,
    out: &RunOutput,
    snaps: Option<&Path>,
) -> Result<()> {
    write_series(cfg, &out.series)?;
    if let Some(dir) = snaps {
        write_snapshot(&out.field, dir)?;
    }
    record_run(summary, out);
    let mass = out.series.points("total_mass");
    if let (Some(a), Some(b)) = (mass.first(), mass.last()) {
        if a.1 > 0.0 {
            summary.set("total_mass_relative_drift", (b.1 - a.1) / a.1);
        }
    }
    Ok(())
}

fn rescaled(cfg: &RunConfig, summary: &mut Summary) -> Result<i32> {
    let l = cfg.rescaled.half_width;
    let domain = Domain::new(
        (-l, l),
        (-l, l),
        cfg.grid.nx,
        cfg.grid.ny,
        Boundary::Outflow,
    )?;
    let thm2 = cfg.theta.map(Theorem2Params::new).transpose()?;
    let mut init = initial_field(cfg, domain, summary)?;
    if cfg.mode == Mode::VerifyThm2 {
        init.time = thm2.map_or(0.0, |p| p.t0);
    }
    let mut probe = RescaledProbe::new(&cfg.monitors);
    let use_thm1 =
        cfg.mode == Mode::VerifyThm1 || (cfg.mode == Mode::Rescaled && cfg.kappa_explicit);
    if use_thm1 {
        probe = probe.with_thm1(Theorem1Params::new(cfg.kappa)?);
        let sup = init.sup_norm().value;
        if sup > cfg.kappa {
            summary.add(
                "warning",
                format!("initial sup {sup} exceeds kappa = {}", cfg.kappa),
            );
        }
    }
    if let Some(p) = thm2 {
        probe = probe.with_thm2(p);
    }
    let mut mon = Monitors::new(cfg.output.every_t)
        .with(|f: &Field, s: &mut FunctionalSeries| probe.sample(f, s));
    let snaps = snapshots_around(cfg, &init, &mut mon)?;
    let out = run_rescaled(&init, &cfg.rescaled, cfg.t_end, &mut mon)?;
    drop(mon);
    write_series(cfg, &out.series)?;
    if let Some(dir) = snaps {
        write_snapshot(&out.field, &dir)?;
    }
    record_run(summary, &out);
    if let Some(r) = out.final_residual {
        summary.set("final_residual", r);
    }
    summary.set("nonstationary", out.is_nonstationary());
    let truncated = probe.moving_lines().filter(|(_, s)| s.truncated).count();
    if truncated > 0 {
        summary.set("moving_lines_truncated", truncated);
    }
    let checks = check_series(&out.series);
    record_checks(summary, &checks);
    Ok(verdict(out.status, &checks))
}

fn scenario(cfg: &RunConfig, summary: &mut Summary) -> Result<i32> {
    let model = model(cfg)?;
    let init = initial_field(cfg, physical_domain(cfg)?, summary)?;
    let mut probe = PhysicalProbe::new(model.speeds());
    let mut tracker = CentroidTracker::new(cfg.scenario.inner_square_halfwidth);
    let mut mon = Monitors::new(cfg.output.every_t)
        .with(|f: &Field, s: &mut FunctionalSeries| probe.sample(f, s))
        .with(|f: &Field, s: &mut FunctionalSeries| tracker.sample(f, s));
    let snaps = snapshots_around(cfg, &init, &mut mon)?;
    let out = run_physical(&init, &model, &cfg.physical, cfg.t_end, &mut mon)?;
    drop(mon);
    finish_physical(cfg, summary, &out, snaps.as_deref())?;
    tracker.write_csv(&cfg.out_dir.join("centroids.csv"))?;
    summary.set("interaction_events", tracker.events.len());
    for pair in ["13", "24"] {
        if let Some(e) = tracker.events.iter().find(|e| e.pair == pair) {
            summary.set(&format!("first_interaction_{pair}"), e.time);
        }
    }
    let checks = check_series(&out.series);
    record_checks(summary, &checks);
    Ok(verdict(out.status, &checks))
}

fn blowup_scan(cfg: &RunConfig, summary: &mut Summary) -> Result<i32> {
    let model = model(cfg)?;
    let init = initial_field(cfg, physical_domain(cfg)?, summary)?;
    let mut probe = PhysicalProbe::new(model.speeds());
    let mut samples: Vec<(f64, f64, [f64; 2])> = Vec::new();
    let mut mon = Monitors::new(cfg.output.every_t)
        .with(|f: &Field, s: &mut FunctionalSeries| probe.sample(f, s))
        .with(|f: &Field, _: &mut FunctionalSeries| {
            let sup = f.sup_norm();
            if sup.value.is_finite() {
                samples.push((f.time, sup.value, sup.location));
            }
            Ok(())
        });
    let snaps = snapshots_around(cfg, &init, &mut mon)?;
    let out = run_physical(&init, &model, &cfg.physical, cfg.t_end, &mut mon)?;
    drop(mon);
    finish_physical(cfg, summary, &out, snaps.as_deref())?;
    let report = cfg.out_dir.join("blowup_report.csv");
    summary.set("rate_constant", cfg.blowup_rate);
    match analyze_blowup(&samples, cfg.blowup_rate) {
        Ok((cand, rows)) => {
            write_blowup_report(&report, Some(cand.t_star_est), &rows)?;
            summary.set("t_star_est", cand.t_star_est);
            summary.set(
                "x_star_est",
                format!("{} {}", cand.x_star_est[0], cand.x_star_est[1]),
            );
            summary.set("fit_quality", cand.fit_quality);
            summary.set(
                "rows_below_rate",
                rows.iter().filter(|r| r.flag == "below_rate").count(),
            );
        }
        Err(Error::NoBlowupTrend(msg)) => {
            let rows: Vec<ReportRow> = samples
                .iter()
                .map(|&(t, sup, _)| ReportRow {
                    t,
                    sup,
                    ratio: None,
                    flag: "n/a",
                })
                .collect();
            write_blowup_report(&report, None, &rows)?;
            summary.set("blowup_trend", format!("none ({msg})"));
        }
        Err(e) => return Err(e),
    }
    Ok(EXIT_OK)
}

fn picard_check(cfg: &RunConfig, summary: &mut Summary) -> Result<i32> {
    let model = model(cfg)?;
    let init = initial_field(cfg, physical_domain(cfg)?, summary)?;
    let sol = picard_solve(&init, &model, &cfg.picard)?;
    let mut series = FunctionalSeries::new();
    for (k, d) in sol.distances.iter().enumerate() {
        series.push((k + 1) as f64, "picard_distance", *d, None, None)?;
    }
    write_series(cfg, &series)?;
    let out = run_physical(
        &init,
        &model,
        &cfg.physical,
        init.time + cfg.picard.horizon,
        &mut Monitors::new(0.0),
    )?;
    let diff = sol.endpoint().sup_distance(&out.field);
    summary.set("status", out.status);
    summary.set("picard_iterations", sol.iterations);
    summary.set(
        "picard_last_distance",
        sol.distances.last().copied().unwrap_or(f64::NAN),
    );
    summary.set("picard_endpoint_time", sol.endpoint().time);
    summary.set("solver_endpoint_time", out.field.time);
    summary.set("endpoint_difference", diff);
    summary.set("final_sup", out.field.sup_norm().value);
    if cfg.output.snapshots {
        let dir = snapshot_dir(cfg)?;
        write_snapshot(&init, &dir)?;
        write_snapshot(&out.field, &dir)?;
    }
    Ok(if out.status != RunStatus::Completed {
        EXIT_SOLVER
    } else if diff > PICARD_AGREEMENT {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    })
}
