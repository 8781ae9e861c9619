use std::process::{Command, Output};

use serde_json::Value;

fn hcbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcbound")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn hinge_linear_transform_slope_is_offset_bound() {
    let out = hcbound(&["transform", "--loss", "hinge", "--class", "linear", "--W", "1", "--B", "0.8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let slope = v["transform"]["segments"][0]["coefficients"]["slope"].as_f64().unwrap();
    assert!((slope - 0.8).abs() < 1e-15);
    let inv = v["inverse"]["segments"][0]["coefficients"]["slope"].as_f64().unwrap();
    assert!((inv - 1.25).abs() < 1e-12);
}

#[test]
fn quadratic_transform_over_all_functions_is_square() {
    let out = hcbound(&["transform", "--loss", "quadratic", "--class", "all", "--format", "csv", "--grid-n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("transform,0.5,0.25"));
}

#[test]
fn json_numbers_carry_seventeen_digits() {
    let out = hcbound(&["transform", "--loss", "hinge", "--B", "0.8", "--W", "1", "--grid-n", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("8.0000000000000004e-1"));
    assert!(!text.contains("-0.0000"));
}

#[test]
fn supremum_loss_without_margin_is_rejected() {
    let out = hcbound(&["transform", "--loss", "sup-hinge", "--gamma", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no non-trivial bound"));
    let needs_gamma = hcbound(&["transform", "--loss", "sup-rho-margin"]);
    assert_eq!(needs_gamma.status.code(), Some(2));
}

#[test]
fn supremum_hinge_with_margin_has_transform() {
    let out = hcbound(&["transform", "--loss", "sup-hinge", "--gamma", "0.1", "--massart-beta", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bound_on_singleton_holds() {
    let dist = r#"{"atoms":[{"x":0.5,"weight":1,"eta":0.8}]}"#;
    let out = hcbound(&["bound", "--loss", "hinge", "--W", "1", "--B", "0.8", "--dist", dist, "--h-w", "-1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["lhs"].as_f64().unwrap() - 0.6).abs() < 1e-9);
    assert_eq!(v["holds"], Value::Bool(true));
}

#[test]
fn bound_rejects_noise_margin_outside_range() {
    let out = hcbound(&["bound", "--loss", "hinge", "--massart-beta", "0.7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn monte_carlo_bound_is_reproducible_across_thread_counts() {
    let args = ["bound", "--loss", "logistic", "--mode", "mc", "--n", "50000", "--seed", "11"];
    let one = Command::new(env!("CARGO_BIN_EXE_hcbound")).args(args).env("HCB_THREADS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_hcbound")).args(args).env("HCB_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn invalid_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_hcbound"))
        .args(["bound", "--loss", "hinge"])
        .env("HCB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_check_passes_and_detects_tampering() {
    let base = ["oracle-check", "--loss", "hinge", "--class", "linear", "--instances", "20", "--grid-n", "801"];
    let ok = hcbound(&base);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(json(&ok)["pass"], Value::Bool(true));
    let mut tampered = base.to_vec();
    tampered.extend(["--tamper", "0.05"]);
    assert_eq!(hcbound(&tampered).status.code(), Some(1));
}

#[test]
fn sweep_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("nested").join("adv");
    let out = hcbound(&[
        "sweep",
        "--experiment",
        "sect7-adv",
        "--n",
        "20000",
        "--sigmas",
        "0.2,0.05",
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn sweep_rejects_increasing_sigmas() {
    let out = hcbound(&["sweep", "--experiment", "sect7-nonadv", "--sigmas", "0.01,0.2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn figure_curves_cover_all_losses() {
    let out = hcbound(&["sweep", "--experiment", "figure1", "--grid-n", "101"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out)["rows"].as_array().unwrap().clone();
    let losses: std::collections::BTreeSet<_> = rows.iter().map(|r| r["loss"].as_str().unwrap().to_owned()).collect();
    assert_eq!(losses.len(), 6);
}

#[test]
fn config_file_supplies_defaults_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"loss":"hinge","W":1,"B":0.8,"grid-n":2}"#).unwrap();
    let out = hcbound(&["transform", "--config", good.to_str().unwrap(), "--B", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let slope = json(&out)["transform"]["segments"][0]["coefficients"]["slope"].as_f64().unwrap();
    assert!((slope - 0.5).abs() < 1e-15);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"loss":"hinge","bogus":1}"#).unwrap();
    assert_eq!(hcbound(&["bound", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}
