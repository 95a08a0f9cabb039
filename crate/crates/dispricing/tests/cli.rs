//! End-to-end tests of the command-line binary: argument handling, exit
//! codes, report files, and the stability of everything a script might
//! parse.

use std::path::Path;
use std::process::{Command, Output};

fn dispricing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dispricing"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is utf-8")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).expect("config written");
    path.to_string_lossy().into_owned()
}

#[test]
fn bare_invocation_prints_usage_and_fails() {
    let output = dispricing(&[]);
    assert_eq!(output.status.code(), Some(1));
    let combined = format!("{}{}", stdout_of(&output), stderr_of(&output));
    assert!(combined.contains("Usage"), "no usage text in: {combined}");
}

#[test]
fn help_and_version_succeed() {
    let help = dispricing(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = stdout_of(&help);
    for subcommand in ["solve", "sweep", "scenario", "compare-eds", "verify"] {
        assert!(text.contains(subcommand), "help lacks {subcommand}: {text}");
    }

    let version = dispricing(&["--version"]);
    assert_eq!(version.status.code(), Some(0));
    assert!(stdout_of(&version).contains("dispricing"));
}

#[test]
fn unknown_flag_fails_with_usage_error() {
    let output = dispricing(&["verify", "--bogus"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn solve_without_config_fails() {
    let output = dispricing(&["solve"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("--config"));
}

#[test]
fn solve_prints_a_text_report_by_default() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(dir.path(), "one.json", r#"{"users": [{"E": 150, "alpha": 2}]}"#);
    let output = dispricing(&["solve", "--config", &config]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(text.contains("eu-01"), "missing user row: {text}");
    assert!(text.contains("12.0376"), "missing solved price: {text}");
    assert!(text.contains("interior"), "missing clamp flag: {text}");
}

#[test]
fn solve_writes_a_json_report_when_asked() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(dir.path(), "one.json", r#"{"users": [{"E": 150, "alpha": 2}]}"#);
    let out = dir.path().join("report.json");
    let output = dispricing(&["solve", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout_of(&output).contains("wrote"));

    let body = std::fs::read_to_string(&out).expect("report exists");
    let report: serde_json::Value = serde_json::from_str(&body).expect("report is JSON");
    assert_eq!(report["user_ids"][0], "eu-01");
    assert_eq!(report["tuned"], false);
    let price = report["outcome"]["prices"][0].as_f64().expect("price");
    assert!((price - 12.0376).abs() < 1e-3, "price {price}");
}

#[test]
fn config_driven_tuning_caps_the_budget() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "tuned.json",
        r#"{
            "users": [{"E": 150, "alpha": 2}, {"E": 150, "alpha": 2}],
            "tune_lambda": true,
            "target_budget": 22
        }"#,
    );
    let out = dir.path().join("tuned.json.out.json");
    let output = dispricing(&["solve", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).expect("report exists"))
            .expect("report is JSON");
    assert_eq!(report["tuned"], true);
    let lambda = report["lambda"].as_f64().expect("lambda");
    assert!(lambda < 1000.0, "multiplier did not move: {lambda}");
    let budget = report["outcome"]["budget_used"].as_f64().expect("budget");
    assert!(budget <= 22.0 + 1e-6, "budget {budget} exceeds target");
}

#[test]
fn invalid_market_fails_with_validation_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(dir.path(), "bad.json", r#"{"users": [{"E": 150, "alpha": 0}]}"#);
    let output = dispricing(&["solve", "--config", &config]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("inconvenience"));
}

#[test]
fn unreachable_budget_exits_with_the_infeasible_code() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "strict.json",
        r#"{
            "users": [{"E": 150, "alpha": 2}, {"E": 150, "alpha": 1}],
            "tune_lambda": true,
            "target_budget": 5
        }"#,
    );
    let output = dispricing(&["solve", "--config", &config]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("infeasible"));
}

#[test]
fn unknown_report_extension_fails() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(dir.path(), "one.json", r#"{"users": [{"E": 150, "alpha": 2}]}"#);
    let out = dir.path().join("report.txt");
    let output = dispricing(&["solve", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("format"));
}

#[test]
fn scenario_table1_replays_the_worked_example() {
    let output = dispricing(&["scenario", "--name", "table1"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    for expected in [
        "700.00", "100.00", "800.00", "576.00", "176.00", "752.00", "(-17%)", "(+76%)", "(-6%)",
    ] {
        assert!(text.contains(expected), "missing {expected} in:\n{text}");
    }
}

#[test]
fn scenario_casemix_requires_a_case_number() {
    let output = dispricing(&["scenario", "--name", "casemix"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("--case"));
}

#[test]
fn scenario_rejects_unknown_names() {
    let output = dispricing(&["scenario", "--name", "table9"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn sweep_writes_the_documented_csv() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("sweep.csv");
    let output = dispricing(&[
        "sweep",
        "--axis",
        "alpha",
        "--range",
        "1:3:1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));

    let body = std::fs::read_to_string(&out).expect("sweep exists");
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "axis_value,price_cents_per_kwh,clamp_flag");
    assert_eq!(lines[1], "1.0000,10.0000,lower");
    assert_eq!(lines[2], "2.0000,12.0376,interior");
    assert_eq!(lines[3], "3.0000,17.1913,interior");
    assert_eq!(lines.len(), 4);
}

#[test]
fn sweep_rejects_malformed_ranges() {
    for range in ["3:1:1", "1:3:0", "1:3", "a:b:c"] {
        let output = dispricing(&["sweep", "--axis", "alpha", "--range", range]);
        assert_eq!(output.status.code(), Some(1), "range {range} was accepted");
    }
    let output = dispricing(&["sweep", "--axis", "budget", "--range", "1:3:1"]);
    assert_eq!(output.status.code(), Some(1), "unknown axis was accepted");
}

#[test]
fn compare_eds_writes_the_comparison_csv() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "pair.json",
        r#"{"users": [{"E": 150, "alpha": 1}, {"E": 150, "alpha": 3}]}"#,
    );
    let out = dir.path().join("versus.csv");
    let output =
        dispricing(&["compare-eds", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));

    let body = std::fs::read_to_string(&out).expect("comparison exists");
    assert!(body.starts_with(
        "case,class_alpha,class_cost_dollars,grid_cost_dollars,total_proposed_dollars,total_eds_dollars,percent_reduction"
    ));
    assert_eq!(body.lines().count(), 3, "one row per inconvenience class:\n{body}");
}

#[test]
fn verify_emits_machine_readable_json() {
    let first = dispricing(&["verify", "--trials", "25", "--seed", "11"]);
    assert_eq!(first.status.code(), Some(0));

    let report: serde_json::Value =
        serde_json::from_str(&stdout_of(&first)).expect("stdout is JSON");
    assert_eq!(report["trials"], 25);
    assert_eq!(report["seed"], 11);
    assert!(report["max_price_deviation"].as_f64().expect("deviation") <= 1e-4);
    assert!(report["max_quadratic_residual"].as_f64().expect("residual") <= 1e-6);

    let second = dispricing(&["verify", "--trials", "25", "--seed", "11"]);
    assert_eq!(first.stdout, second.stdout, "verification is not deterministic");
}
