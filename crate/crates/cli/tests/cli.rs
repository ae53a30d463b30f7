//! End-to-end tests of the `delayq` binary: exit codes, JSON shape,
//! file outputs, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn delayq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delayq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const FAST_FIG5: &str = r#"
model = "constant-delay"

[params]
lambda = 3.0
mu = 1.0
alpha = 1.0
epsilon = 0.2
gamma = 2.2360679774997896
delta = 1.947

[history]
q1 = 1.0
q2 = 2.0

[integration]
steps_per_delay = 64
t_end = 300.0
"#;

#[test]
fn analyze_prints_stability_report_json() {
    let out = delayq([
        "analyze",
        "--model",
        "constant-delay",
        "--lambda",
        "3",
        "--mu",
        "1",
        "--alpha",
        "1",
        "--epsilon",
        "0.2",
        "--gamma",
        "2.2360679774997896",
        "--delta",
        "1.947",
    ]
    .as_ref());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["model"], "constant-delay");
    assert!(doc["resonant"].as_bool().unwrap());
    assert!((doc["delta_cr"].as_f64().unwrap() - 2.0576512039621833).abs() < 1e-9);
    assert!((doc["delta_mod"].as_f64().unwrap() - 1.9682084848621915).abs() < 1e-9);
}

#[test]
fn analyze_rejects_bad_parameters_with_exit_2() {
    let out = delayq(["analyze", "--lambda", "-3", "--mu", "1", "--delta", "1"].as_ref());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn analyze_unstable_regime_is_numerical_failure() {
    // lambda <= 2 mu: no oscillatory instability, exit 3 with a diagnostic
    let out = delayq(["analyze", "--lambda", "1.5", "--mu", "1", "--delta", "1"].as_ref());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no oscillatory instability"));
}

#[test]
fn simulate_writes_csv_and_json_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "fig5.toml", FAST_FIG5);
    let csv = dir.path().join("fig5.csv");
    let json = dir.path().join("fig5.json");
    let args = [
        "simulate",
        "--config",
        &config,
        "--csv",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ];

    let out = delayq(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("verdict: Converging"), "stdout: {stdout}");

    let csv_bytes = fs::read(&csv).unwrap();
    let json_bytes = fs::read(&json).unwrap();
    assert!(csv_bytes.starts_with(b"t,q1,q2\n"));
    let doc: serde_json::Value = serde_json::from_slice(&json_bytes).unwrap();
    assert_eq!(doc["classification"]["verdict"], "Converging");
    assert!((doc["stability"]["delta_mod"].as_f64().unwrap() - 1.9682084848621915).abs() < 1e-9);

    // byte-identical on re-run
    let out = delayq(&args);
    assert!(out.status.success());
    assert_eq!(fs::read(&csv).unwrap(), csv_bytes);
    assert_eq!(fs::read(&json).unwrap(), json_bytes);
}

#[test]
fn simulate_without_output_paths_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "fig5.toml", FAST_FIG5);
    let out = delayq(["simulate", "--config", &config].as_ref());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_missing_config_is_config_error() {
    let out = delayq(["simulate", "--config", "/nonexistent/nope.toml"].as_ref());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scan_with_non_straddling_bracket_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // both endpoints far below threshold -> converging at hi
    let config = write_config(dir.path(), "scan.toml", FAST_FIG5);
    let out = delayq(["scan", "--config", &config, "--lo", "0.5", "--hi", "0.6"].as_ref());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bracket"));
}

#[test]
fn scan_without_bracket_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "scan.toml", FAST_FIG5);
    let out = delayq(["scan", "--config", &config].as_ref());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_passes_on_reference_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "fig5.toml", FAST_FIG5);
    let out = delayq(["check", "--config", &config].as_ref());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "stdout: {stdout}");
    assert!(stdout.contains("all checks passed"));
    assert!(stdout.contains("determinism"));
    assert!(stdout.contains("total mass"));
}

#[test]
fn check_covers_moving_average_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    let ma = FAST_FIG5
        .replace("constant-delay", "moving-average")
        .replace("lambda = 3.0", "lambda = 10.0")
        .replace("delta = 1.947", "delta = 2.18")
        .replace("gamma = 2.2360679774997896", "gamma = 1.913743007858")
        .replace("q1 = 1.0", "q1 = 3.0")
        .replace("q2 = 2.0", "q2 = 4.0");
    let config = write_config(dir.path(), "ma.toml", &ma);
    let out = delayq(["check", "--config", &config].as_ref());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "stdout: {stdout}");
    assert!(stdout.contains("moving average vs quadrature"));
}
