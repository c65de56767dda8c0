//! End-to-end CLI behavior: exit codes, stdout headlines, config-file
//! equivalence, environment defaults, and summary schema round-trips.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_xipoint")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("xipoint-cli-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_args(args: &[&str], out_dir: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .env_remove("XIPOINT_OUT_DIR")
        .output()
        .expect("spawn xipoint")
}

fn die_json() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/die.json")
}

#[test]
fn help_exits_zero() {
    let out = Command::new(bin()).arg("--help").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("solve"));
}

#[test]
fn bad_flag_is_a_validation_error() {
    let out = Command::new(bin())
        .args(["solve", "--fn", "exp", "--x", "1", "--definitely-not-a-flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_seed_reports_field_path_and_exits_one() {
    let dir = tmp_dir("seed");
    let out = Command::new(bin())
        .args(["verify", "--fn", "sin", "--dist", "uniform:-1,1"])
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    // clap enforces the required --seed flag itself
    assert_eq!(out.status.code(), Some(1));
    let config = dir.join("cfg.json");
    fs::write(
        &config,
        r#"{"command": "verify", "function": "sin", "dist": "uniform:-1,1", "count": 10}"#,
    )
    .unwrap();
    let out = run_args(&["run", "--config", config.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("seed:"), "stderr: {stderr}");
}

#[test]
fn unknown_config_field_is_rejected_with_its_name() {
    let dir = tmp_dir("schema");
    let config = dir.join("cfg.json");
    fs::write(
        &config,
        r#"{"command": "solve", "function": "exp", "x": 1.0, "wibble": 2}"#,
    )
    .unwrap();
    let out = run_args(&["run", "--config", config.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wibble"));
}

#[test]
fn domain_violations_exit_two_with_outcome_ids() {
    let dir = tmp_dir("solver");
    let out = run_args(
        &[
            "verify", "--fn", "log-shifted", "--dist", "uniform:-5,-2", "-N", "5", "--seed", "3",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("outcome 0"), "stderr: {stderr}");
}

#[test]
fn config_file_and_flags_produce_identical_bytes() {
    let dir_flags = tmp_dir("flags");
    let dir_cfg = tmp_dir("cfg");
    let out = run_args(
        &[
            "verify", "--fn", "exp", "--a", "0.5", "--n", "2", "--dist", "uniform:-1,1", "-N",
            "500", "--seed", "99",
        ],
        &dir_flags,
    );
    assert!(out.status.success());

    let config = dir_cfg.join("cfg.json");
    fs::write(
        &config,
        r#"{
          "command": "verify",
          "function": "exp",
          "a": 0.5,
          "n": 2,
          "dist": "uniform:-1,1",
          "count": 500,
          "seed": 99,
          "policy": {"variant": "sup"},
          "tolerance": 1e-9
        }"#,
    )
    .unwrap();
    let out = run_args(&["run", "--config", config.to_str().unwrap()], &dir_cfg);
    assert!(out.status.success());

    let csv_a = fs::read(dir_flags.join("verify_detail.csv")).unwrap();
    let csv_b = fs::read(dir_cfg.join("verify_detail.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn measurability_headline_and_summary() {
    let dir = tmp_dir("meas");
    let out = run_args(
        &[
            "measurability",
            "--fn",
            "exp",
            "--space",
            die_json().to_str().unwrap(),
        ],
        &dir,
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("measurable: true"));
    let summary: xipoint::report::RunSummary =
        serde_json::from_str(&fs::read_to_string(dir.join("measurability_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary.measurable, Some(true));
    assert_eq!(summary.count, 6);
}

#[test]
fn emitted_summaries_revalidate_against_the_schema() {
    let dir = tmp_dir("roundtrip");
    for args in [
        vec!["solve", "--fn", "poly:0,0,1", "--x", "2"],
        vec![
            "verify", "--fn", "sin", "--dist", "uniform:-1,1", "-N", "50", "--seed", "1",
        ],
        vec![
            "delta-demo",
            "--fn",
            "poly:0,0,1",
            "--dist",
            "uniform:0,1",
            "--sample-size",
            "100",
            "--reps",
            "20",
            "--seed",
            "2",
        ],
        vec![
            "mle-demo",
            "--model",
            "bernoulli:0.3",
            "--sample-size",
            "50",
            "--reps",
            "20",
            "--seed",
            "3",
        ],
        vec!["expand", "--fn", "exp", "--x", "1", "--n", "3"],
    ] {
        let out = run_args(&args, &dir);
        assert!(out.status.success(), "{args:?}: {:?}", out.status);
        let command = args[0];
        let text = fs::read_to_string(dir.join(format!("{command}_summary.json"))).unwrap();
        let parsed: Result<xipoint::report::RunSummary, _> = serde_json::from_str(&text);
        assert!(parsed.is_ok(), "{command} summary fails schema: {text}");
    }
}

#[test]
fn verify_full_scale_passes_all_residuals() {
    let dir = tmp_dir("verify-full");
    let out = run_args(
        &[
            "verify", "--fn", "sin", "--a", "0", "--n", "3", "--dist", "uniform:-1,1", "--N",
            "10000", "--seed", "7",
        ],
        &dir,
    );
    assert!(out.status.success());
    let summary: xipoint::report::RunSummary =
        serde_json::from_str(&fs::read_to_string(dir.join("verify_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary.count, 10_000);
    assert_eq!(summary.failures, 0);
    assert_eq!(summary.residual_pass_fraction, 1.0);
}

#[test]
fn inf_policy_selects_the_lower_root() {
    let dir = tmp_dir("inf");
    let tau = (2.0 * std::f64::consts::PI).to_string();
    let out = run_args(
        &[
            "solve", "--fn", "sin", "--a", "0", "--x", &tau, "--n", "1", "--policy", "inf",
        ],
        &dir,
    );
    assert!(out.status.success());
    let summary: xipoint::report::RunSummary =
        serde_json::from_str(&fs::read_to_string(dir.join("solve_summary.json")).unwrap())
            .unwrap();
    let xi = match summary.xi.unwrap() {
        xipoint::Value::Scalar(v) => v,
        other => panic!("expected scalar, got {other:?}"),
    };
    assert!((xi - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
}

#[test]
fn env_var_sets_default_out_dir() {
    let dir = tmp_dir("envvar");
    let out = Command::new(bin())
        .args(["solve", "--fn", "exp", "--x", "1"])
        .env("XIPOINT_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("solve_summary.json").exists());
}

#[test]
fn solve_headline_matches_known_answer() {
    let dir = tmp_dir("headline");
    let out = run_args(&["solve", "--fn", "poly:0,0,1", "--a", "0", "--x", "2", "--n", "1"], &dir);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("xi = 1 "), "stdout: {stdout}");
}

#[test]
fn two_rv_rejects_mismatched_spaces() {
    let dir = tmp_dir("two-rv");
    // A second space with different outcome ids.
    let other = dir.join("other.json");
    fs::write(
        &other,
        r#"{
          "outcomes": ["a", "b"],
          "atoms": [["a"], ["b"]],
          "weights": [0.5, 0.5],
          "values": {"a": 1.0, "b": 2.0}
        }"#,
    )
    .unwrap();
    let out = run_args(
        &[
            "two-rv",
            "--fn",
            "exp",
            "--space-x",
            die_json().to_str().unwrap(),
            "--space-y",
            other.to_str().unwrap(),
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("space_y"));
}
