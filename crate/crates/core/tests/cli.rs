use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dequant-svt")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}); stderr: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_matrix_with_requested_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let out = run(&["gen", "--m", "30", "--n", "20", "--singular-values", "1,0.6,0.25", "--seed", "4", "--out", path(&a)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert!(report["max_spectrum_error"].as_f64().unwrap() <= 1e-9);
    assert!(a.exists() && dir.path().join("a.json").exists());
    assert!(dir.path().join("a_b.csv").exists());
}

#[test]
fn generated_files_feed_query() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    assert!(run(&["gen", "--m", "24", "--n", "16", "--singular-values", "1,0.7", "--out", path(&a)]).status.success());
    let b = dir.path().join("a_b.csv");
    let out = run(&[
        "query", "--matrix", path(&a), "--vector", path(&b), "--function", "identity", "--eps1", "0.05",
        "--r", "300", "--c", "300", "--exact-z", "--trials", "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["errors"].as_array().unwrap().len(), 4);
}

#[test]
fn plan_reports_sizes_and_limits() {
    let out = run(&["plan", "--m", "40", "--n", "30", "--singular-values", "1,0.8", "--eps1", "0.01"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let p = json(&out);
    assert!(p["r"].as_u64().unwrap() > 0 && p["c"].as_u64().unwrap() > 0);
    assert!(p["theta"].as_f64().unwrap() <= p["theta_limit"].as_f64().unwrap());
    assert!(p["gamma"].as_f64().unwrap() <= p["theta_limit"].as_f64().unwrap());
}

#[test]
fn query_with_exact_sketch_product_is_accurate() {
    let out = run(&[
        "query", "--m", "40", "--n", "30", "--singular-values", "1,0.8", "--function", "power", "--p", "2",
        "--eps1", "0.05", "--r", "400", "--c", "400", "--exact-z", "--trials", "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    let eps1 = report["eps1"].as_f64().unwrap();
    for e in report["errors"].as_array().unwrap() {
        assert!(e.as_f64().unwrap() <= eps1, "error {e} > {eps1}");
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    assert_eq!(run(&["plan", "--function", "cosine", "--eps1", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["plan", "--function", "power", "--eps1", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["sample", "--m", "20", "--n", "10"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"sede": 3}"#).unwrap();
    assert_eq!(run(&["plan", "--config", path(&cfg)]).status.code(), Some(2));
    let missing = dir.path().join("missing.csv");
    assert_eq!(run(&["plan", "--matrix", path(&missing), "--eps1", "0.1"]).status.code(), Some(2));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"m": 40, "n": 30, "singular_values": [1.0, 0.8], "eps1": 0.5, "eta": 0.3}"#).unwrap();
    let out = run(&["plan", "--config", path(&cfg), "--eta", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["eta"].as_f64().unwrap(), 0.1);
}
