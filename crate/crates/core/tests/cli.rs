use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn broadwell(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_broadwell"))
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn summary(dir: &Path) -> String {
    fs::read_to_string(dir.join("out/summary.txt")).unwrap()
}

const SMALL_THM1: &str = "mode = \"verify-thm1\"\nt_end = 2.0\n[grid]\nn = 48\n";

#[test]
fn thm1_run_passes_and_writes_outputs() {
    let d = tempfile::tempdir().unwrap();
    let out = broadwell(d.path(), SMALL_THM1, &["--seed", "4"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(d.path());
    assert!(s.contains("seed = 4"), "{s}");
    assert!(s.contains("exit_code = 0"), "{s}");
    let csv = fs::read_to_string(d.path().join("out/series.csv")).unwrap();
    assert!(csv.starts_with("time,name,value,bound,line_coord\n"));
    assert!(csv.contains(",q14_thm1,"));
    assert!(csv.contains(",moving_14h_0,"));
    assert!(d.path().join("out/snapshots").is_dir());
    assert!(!d.path().join("out/.lock").exists());
}

#[test]
fn same_seed_same_series() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(broadwell(d.path(), SMALL_THM1, &[]).status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("out/series.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn cfl_violation_exits_with_solver_code() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "mode = \"rescaled\"\n[rescaled]\ndt = 0.9\n[initial]\nkind = \"uniform\"\nvalues = [3, 0, 0, 0]\n[grid]\nn = 32\n";
    let out = broadwell(d.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("required dt"), "{err}");
    assert!(summary(d.path()).contains("exit_code = 2"));
}

#[test]
fn config_errors_name_the_key() {
    let d = tempfile::tempdir().unwrap();
    let out = broadwell(d.path(), "mode = \"physical\"\n[grid]\nsize = 3\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));

    let out = broadwell(d.path(), "mode = \"verify-thm2\"\ntheta = 0.3\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));
}

#[test]
fn missing_config_is_io_error() {
    let d = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_broadwell"))
        .arg(d.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn locked_output_directory_is_refused() {
    let d = tempfile::tempdir().unwrap();
    fs::create_dir_all(d.path().join("out")).unwrap();
    fs::write(d.path().join("out/.lock"), "").unwrap();
    let out = broadwell(d.path(), "mode = \"physical\"\n[grid]\nn = 16\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(d.path().join("out/.lock").exists());
}

#[test]
fn overrides_apply() {
    let d = tempfile::tempdir().unwrap();
    let out = broadwell(
        d.path(),
        "mode = \"physical\"\n",
        &[
            "--override",
            "grid.n=16",
            "--override",
            "t_end=0.25",
            "--override",
            "initial.kind=zero",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(d.path().join("out/series.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("0.25,"), "{last}");
}

#[test]
fn picard_check_agrees_with_default_settings() {
    let d = tempfile::tempdir().unwrap();
    let out = broadwell(d.path(), "mode = \"picard-check\"\n", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", summary(d.path()));
    let s = summary(d.path());
    let diff: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("endpoint_difference = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(diff < 1e-3, "{diff}");
}

#[test]
fn scenario_writes_centroids() {
    let d = tempfile::tempdir().unwrap();
    let out = broadwell(d.path(), "mode = \"scenario\"\n[grid]\nn = 128\n", &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let c = fs::read_to_string(d.path().join("out/centroids.csv")).unwrap();
    assert!(c.starts_with("time,species,cx,cy,mass,age_flag\n"));
    assert!(c.lines().any(|l| l.split(',').nth(1) == Some("4")));
    assert!(summary(d.path()).contains("first_interaction_13"));
}
