use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mtd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const TWO_POINT: &str =
    r#"{"model":{"model":"two_point","kappa":1},"f":[1.5,0.5],"g":[0.5,1.5],"K":64}"#;

#[test]
fn distance_matches_two_point_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.json", TWO_POINT);
    let dump = dir.path().join("path.csv");
    let out = mtd(&[
        "distance",
        "--config",
        &cfg,
        "--quiet",
        "--dump-path",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    let value = v["value"].as_f64().unwrap();
    let exact = std::f64::consts::PI.powi(2) / 18.0;
    assert!((value - exact).abs() / exact < 5e-3);
    assert_eq!(v["config"]["K"], 64);
    assert_eq!(v["phi_profile"].as_array().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dump).unwrap();
    assert!(csv.starts_with("k,s_k,state,rho,h"));
    assert_eq!(csv.lines().count(), 1 + 65 * 2);
}

#[test]
fn equal_endpoints_give_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "d.json",
        r#"{"model":{"model":"ring","m":6},"f":"cos","g":"cos","K":16}"#,
    );
    let out = mtd(&["distance", "--config", &cfg, "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["value"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn xi_override_changes_the_cost() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.json", TWO_POINT);
    let plain = json(&mtd(&["distance", "--config", &cfg, "--quiet"]));
    let out = mtd(&["distance", "--config", &cfg, "--quiet", "--xi", "p=1.5"]);
    assert_eq!(out.status.code(), Some(0));
    let power = json(&out);
    assert_eq!(power["xi"]["kind"], "power");
    assert_ne!(power["value"], plain["value"]);
    assert!(power["value"].as_f64().unwrap() > 0.0);
    let bad = mtd(&["distance", "--config", &cfg, "--quiet", "--xi", "p=3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "d.json",
        r#"{"model":{"model":"ring","m":5},"f":"random","g":"random","K":16}"#,
    );
    let a = mtd(&["distance", "--config", &cfg, "--quiet", "--seed", "9"]);
    let b = mtd(&["distance", "--config", &cfg, "--quiet", "--seed", "9"]);
    let c = mtd(&["distance", "--config", &cfg, "--quiet", "--seed", "10"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(json(&a)["config"]["seed"], 9);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"model":{"model":"two_point"}}"#);
    assert_eq!(mtd(&["distance", "--config", &bad]).status.code(), Some(2));
    assert_eq!(
        mtd(&["distance", "--config", "/nonexistent.json"])
            .status
            .code(),
        Some(2)
    );
    let empty = write(dir.path(), "empty.json", r#"{"scenarios":[]}"#);
    assert_eq!(mtd(&["verify", "--config", &empty]).status.code(), Some(2));
    let unknown = write(
        dir.path(),
        "unknown.json",
        r#"{"scenarios":[{"inequality_id":"nope","model":{"model":"two_point","kappa":1},"f":"uniform"}]}"#,
    );
    assert_eq!(
        mtd(&["verify", "--config", &unknown, "--quiet"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mtd(&["verify", "--preset", "missing"]).status.code(),
        Some(2)
    );
    assert_eq!(mtd(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn nonconvergence_exits_three_with_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "d.json",
        r#"{"model":{"model":"ring","m":6},"f":"random","g":"cos","K":32,
            "solver":{"max_iterations":1,"seed_epsilon":0}}"#,
    );
    let out = mtd(&["distance", "--config", &cfg, "--quiet"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["diagnostics"]["converged"], false);
}

#[test]
fn single_scenario_gives_one_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "v.json",
        r#"{"scenarios":[{"inequality_id":"dimensional_contraction",
            "model":{"model":"circle_diffusion","m":32},
            "params":{"R":0,"n":1,"t":0.2,"K":16},"f":"cos","g":"sin"}]}"#,
    );
    let summary = dir.path().join("s.csv");
    let out = mtd(&[
        "verify",
        "--config",
        &cfg,
        "--quiet",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["inequality_id"], "dimensional_contraction");
    assert_eq!(reports[0]["lhs"]["provenance"], "certified-path-action");
    assert_eq!(v["config"]["scenarios"][0]["params"]["n"], 1.0);
    let csv = std::fs::read_to_string(summary).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn failed_check_exits_one_unless_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = r#"{"inequality_id":"kuwada","model":{"model":"two_point","kappa":1},
        "params":{"t":1.0,"K":32},"f":[1.8,0.2]"#;
    let strict = write(
        dir.path(),
        "a.json",
        &format!(r#"{{"scenarios":[{scenario}}}]}}"#),
    );
    let out = mtd(&["verify", "--config", &strict, "--quiet"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["all_pass"], false);
    let labeled = write(
        dir.path(),
        "b.json",
        &format!(r#"{{"scenarios":[{scenario},"diagnostic":"measured only"}}]}}"#),
    );
    assert_eq!(
        mtd(&["verify", "--config", &labeled, "--quiet"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn bundled_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("suite.json");
    let out = mtd(&[
        "verify",
        "--preset",
        "paper-suite",
        "--quiet",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(v["all_pass"], true);
    assert!(v["reports"].as_array().unwrap().len() >= 30);
}

#[test]
fn curvature_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let run = |text: &str| {
        let cfg = write(dir.path(), "c.json", text);
        let out = mtd(&["curvature", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(0));
        json(&out)
    };
    let inf = run(r#"{"model":{"model":"two_point","kappa":1},"n":"inf"}"#);
    assert!((inf["best_R_estimate"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert!(inf["lsi_lower_bound"].as_f64().unwrap() >= 0.25 - 1e-6);
    let two = run(r#"{"model":{"model":"two_point","kappa":1},"n":2}"#);
    assert!((two["best_R_estimate"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    // regression baseline: the 8-cycle has zero curvature and gap 2 − √2
    let ring = run(r#"{"model":{"model":"ring","m":8},"n":"inf"}"#);
    assert!(ring["best_R_estimate"].as_f64().unwrap().abs() < 1e-6);
    let lsi = ring["lsi_lower_bound"].as_f64().unwrap();
    assert!((lsi - 0.853_553_388_9).abs() < 1e-6, "{lsi}");
    assert_eq!(ring["sample_count"], 64);
}
