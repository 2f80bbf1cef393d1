//! Command-line behavior: exit codes, error messages that name the valid
//! choices, artifact layout, and config/flag merging. All runs here are
//! tiny; numerical quality is covered by the acceptance tests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gmlab")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gmlab-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap_or_else(|e| {
        panic!("cannot read {}: {e}", path.display());
    }))
    .unwrap()
}

#[test]
fn unknown_payoff_exits_2_and_lists_the_valid_names() {
    let out = run(&["expectation", "bogus", "--paths", "10", "--steps", "4"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let err = stderr(&out);
    assert!(err.contains("bogus"), "{err}");
    assert!(err.contains("square") && err.contains("call:K"), "{err}");
}

#[test]
fn unknown_check_exits_2_and_lists_the_valid_names() {
    let out = run(&["verify", "no_such_check", "--paths", "10", "--steps", "4"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let err = stderr(&out);
    assert!(err.contains("no_such_check"), "{err}");
    assert!(err.contains("tanaka") && err.contains("krylov"), "{err}");
}

#[test]
fn inverted_band_is_a_config_error() {
    let out = run(&["simulate", "--sigma-low", "2.0", "--sigma-high", "1.0"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    assert!(stderr(&out).contains("sigma"), "{}", stderr(&out));
}

#[test]
fn nonpositive_occupation_window_is_rejected() {
    let out = run(&["localtime", "--epsilon=-0.5", "--paths", "10", "--steps", "8"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    assert!(stderr(&out).contains("positive"), "{}", stderr(&out));
}

#[test]
fn simulate_writes_one_summary_row_per_strategy() {
    let dir = tmp("simulate");
    let out = run(&[
        "simulate", "--paths", "50", "--steps", "16", "--seed", "3", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&dir.join("simulate.json"));
    assert!(v["schema_version"].is_u64());
    let strategies = v["strategies"].as_array().unwrap();
    assert_eq!(strategies.len(), 7, "default family size");
    for s in strategies {
        assert!(s["qv_mean"].as_f64().unwrap() > 0.0);
    }
    // One stdout line per strategy plus the artifact line.
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().map(str::trim).collect();
    assert_eq!(lines.len(), 8, "{lines:?}");
    assert!(lines[7].starts_with("wrote "), "{lines:?}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_dump_paths_writes_full_csv_per_strategy() {
    let dir = tmp("dump");
    let out = run(&[
        "simulate", "--dump-paths", "--paths", "5", "--steps", "8", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = dir.join("paths_const_1.000000.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("path_id,step,t,M,qv_exact,sigma"));
    // 5 paths × 9 nodes.
    assert_eq!(lines.count(), 45);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn expectation_reports_both_bounds_and_writes_the_report() {
    let dir = tmp("expectation");
    let out = run(&[
        "expectation", "abs", "--paths", "400", "--steps", "32", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("abs: upper"), "{text}");
    assert!(text.contains("lower"), "{text}");
    let v = json(&dir.join("expectation_abs.json"));
    let upper = v["upper"].as_f64().unwrap();
    let lower = v["lower"].as_f64().unwrap();
    assert!(lower <= upper, "lower {lower} vs upper {upper}");
    assert_eq!(v["per_strategy"].as_array().unwrap().len(), 7);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn localtime_writes_field_table_and_digest() {
    let dir = tmp("localtime");
    let out = run(&[
        "localtime", "--paths", "60", "--steps", "64", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.join("localtime_field.csv")).unwrap();
    assert!(
        text.starts_with("level,time,mean_tanaka,mean_occupation,se"),
        "{}",
        text.lines().next().unwrap_or_default()
    );
    let v = json(&dir.join("localtime.json"));
    assert_eq!(v["n_paths"].as_u64(), Some(60));
    assert!(v["epsilon"].as_f64().unwrap() > 0.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_merges_with_flag_overrides() {
    let dir = tmp("config");
    let cfg_path = dir.join("run.toml");
    std::fs::write(&cfg_path, "seed = 9\nn_paths = 77\nsigma_high = 1.5\n").unwrap();
    let out = run(&[
        "simulate",
        "--config",
        cfg_path.to_str().unwrap(),
        "--paths",
        "33",
        "--steps",
        "8",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&dir.join("simulate.json"));
    assert_eq!(v["config"]["seed"].as_u64(), Some(9), "file value survives");
    assert_eq!(v["config"]["n_paths"].as_u64(), Some(33), "flag overrides file");
    assert_eq!(v["config"]["sigma_high"].as_f64(), Some(1.5));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_with_unknown_field_is_rejected() {
    let dir = tmp("badconfig");
    let cfg_path = dir.join("run.toml");
    std::fs::write(&cfg_path, "n_pathz = 10\n").unwrap();
    let out = run(&["simulate", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    assert!(stderr(&out).contains("n_pathz"), "{}", stderr(&out));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_single_check_reports_and_exits_zero() {
    let dir = tmp("verify");
    let out = run(&[
        "verify", "ae_identity", "--paths", "500", "--steps", "64", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("[pass] ae_identity"), "{text}");
    assert!(text.contains("suite: PASS (1 checks)"), "{text}");
    // Timing goes to stderr, never stdout (stdout must be reproducible).
    assert!(!text.contains("elapsed"), "{text}");
    let v = json(&dir.join("verify.json"));
    assert_eq!(v["passed"].as_bool(), Some(true));
    assert_eq!(v["checks"].as_array().unwrap().len(), 1);
    std::fs::remove_dir_all(&dir).ok();
}
