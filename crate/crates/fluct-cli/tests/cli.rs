//! End-to-end checks of the binary: exit codes, artifact shapes, and the
//! model round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fluct")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn threshold_emits_expected_json() {
    let out = run(&[
        "threshold",
        "--model",
        data("brownian.json").to_str().unwrap(),
        "--strike",
        "2",
        "--rate",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["x_star"].as_f64().unwrap()).abs() < 1e-10);
    assert!((v["discount_factor"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert_eq!(v["pasting"], "Smooth");
    assert!((v["right_derivative"].as_f64().unwrap() + 1.0).abs() < 1e-10);
}

#[test]
fn malformed_subintensity_exits_2_with_field_path() {
    let out = run(&[
        "threshold",
        "--model",
        data("bad_T.json").to_str().unwrap(),
        "--strike",
        "2",
        "--rate",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"], "validation");
    assert_eq!(err["field"], "down.phases.T[0][0]");
}

#[test]
fn unknown_command_exits_64() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "usage text missing: {text}");
}

#[test]
fn price_grid_has_full_precision_rows() {
    let out = run(&[
        "price",
        "--model",
        data("brownian.json").to_str().unwrap(),
        "--strike",
        "2",
        "--rate",
        "1",
        "--grid",
        "0:1:3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,value,payoff"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    // 17 significant digits in scientific notation.
    let first_value = rows[0].split(',').nth(1).unwrap();
    let mantissa = first_value.split('e').next().unwrap();
    let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
    assert_eq!(digits, 17, "row: {}", rows[0]);
    // v(1) = e^{-1} on the last row.
    let last_value: f64 = rows[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((last_value - (-1.0_f64).exp()).abs() < 1e-10);
}

#[test]
fn factors_emit_roots_and_mixture_blocks() {
    let out = run(&[
        "factors",
        "--model",
        data("bv_up.json").to_str().unwrap(),
        "--rate",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("re,im,multiplicity,kind\n"));
    assert!(text.contains(",root\n"));
    assert!(text.contains(",pole\n"));
    assert!(text.contains("atom0,7.3205080756887"));
    assert!(text.contains("re_rho,im_rho,k,re_a,im_a"));
}

#[test]
fn diagnose_reports_regularity_and_kink() {
    let out = run(&[
        "diagnose",
        "--model",
        data("bv_up.json").to_str().unwrap(),
        "--rate",
        "2",
        "--strike",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["regularity"]["regular_downward"], "irregular");
    assert_eq!(v["pasting"], "Continuous");
    let rd = v["right_derivative"].as_f64().unwrap();
    let rd_num = v["right_derivative_numeric"].as_f64().unwrap();
    assert!((rd - rd_num).abs() < 1e-3);
}

#[test]
fn simulate_reports_per_shard_and_merged() {
    let out = run(&[
        "simulate",
        "--model",
        data("brownian.json").to_str().unwrap(),
        "--rate",
        "1",
        "--paths",
        "1000",
        "--shards",
        "4",
        "--seed",
        "12",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("stat,shard,n,mean,std_error\n"));
    assert_eq!(text.matches("neg_inf_mean,").count(), 5); // 4 shards + merged
    assert!(text.contains("neg_inf_mean,merged,1000,"));
    // Determinism: identical flags give identical bytes.
    let again = run(&[
        "simulate",
        "--model",
        data("brownian.json").to_str().unwrap(),
        "--rate",
        "1",
        "--paths",
        "1000",
        "--shards",
        "4",
        "--seed",
        "12",
    ]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn identity_check_emits_rows_with_z_scores() {
    let out = run(&[
        "identity-check",
        "--model",
        data("bv_up.json").to_str().unwrap(),
        "--rate",
        "1",
        "--grid",
        "0.5:1:2",
        "--paths",
        "2000",
        "--shards",
        "2",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("identity,alpha,beta,x,lhs,rhs,residual,z_score\n"));
    assert!(text.contains("wiener_hopf,"));
    assert!(text.contains("pecherskii_rogozin,"));
    assert!(text.contains("fluctuation,"));
    // Analytic residuals in the emitted rows stay tiny.
    for line in text.lines().filter(|l| l.starts_with("pecherskii_rogozin")) {
        let resid: f64 = line.split(',').nth(6).unwrap().parse().unwrap();
        assert!(resid < 1e-10, "line: {line}");
    }
}

#[test]
fn model_round_trip_through_files() {
    // A model serialized from a parsed config re-parses to an equal model.
    let text = std::fs::read_to_string(data("bv_up.json")).unwrap();
    let model = fluct::models::LevyModel::from_json_str(&text).unwrap();
    let reserialized = model.to_json_string();
    let back = fluct::models::LevyModel::from_json_str(&reserialized).unwrap();
    assert_eq!(model, back);
}

#[test]
fn out_flag_writes_artifact_to_disk() {
    let dir = std::env::temp_dir().join("fluct-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("threshold.json");
    let out = run(&[
        "threshold",
        "--model",
        data("brownian.json").to_str().unwrap(),
        "--strike",
        "2",
        "--rate",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["pasting"], "Smooth");
    std::fs::remove_file(&path).ok();
}
