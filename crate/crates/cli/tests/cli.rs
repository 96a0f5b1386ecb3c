use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gef(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gef")).args(args).output().expect("spawn gef")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ndjson(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn error_json(o: &Output) -> Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(err.lines().last().unwrap()).unwrap()
}

fn csv_body(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn constants_table_has_header_and_rows() {
    let o = gef(&["constants", "--seed", "4", "--no-timestamp"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "# seed: 4"));
    assert!(text.lines().any(|l| l.starts_with("# config_sha256: ")));
    assert!(!text.contains("unix_time"));
    let rows = csv_body(&text);
    assert_eq!(rows.len(), 301);
    let last: Vec<f64> = rows[300].iter().map(|c| c.parse().unwrap()).collect();
    assert!((last[0] - 3.0).abs() < 1e-12);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let args = ["sample", "--n", "20", "--count", "5", "--seed", "11", "--no-timestamp"];
    let a = gef(&args);
    let b = gef(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = gef(&["sample", "--n", "20", "--count", "5", "--seed", "12", "--no-timestamp"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn ndjson_starts_with_meta() {
    let o = gef(&["sample", "--n", "12", "--count", "3", "--seed", "1"]);
    let lines = ndjson(&stdout(&o));
    assert_eq!(lines.len(), 4);
    let meta = &lines[0]["meta"];
    assert_eq!(meta["command"], "sample");
    assert_eq!(meta["seed"], 1);
    assert!(meta["unix_time"].is_u64());
    for rec in &lines[1..] {
        assert_eq!(rec["zeros"].as_array().unwrap().len(), 12);
    }
}

#[test]
fn hist_reads_sample_output() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("zeros.ndjson");
    let s = samples.to_str().unwrap();
    assert!(gef(&["sample", "--r", "2", "--count", "400", "--out", s]).status.success());
    let o = gef(&["hist", s, "--bins", "2", "--lo", "0", "--hi", "1"]);
    assert!(o.status.success());
    let rows = csv_body(&stdout(&o));
    assert_eq!(rows.len(), 2);
    // L = 2 puts 4/pi zeros per unit area of the scaled plane
    for r in rows {
        let (d, se): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!((d - 4.0 / std::f64::consts::PI).abs() < 4.0 * se + 0.02, "{d} ± {se}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 10, "count": 4, "seed": 3}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let lines = ndjson(&stdout(&gef(&["sample", "--config", c, "--count", "2"])));
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["meta"]["seed"], 3);
    assert_eq!(lines[0]["meta"]["config"]["n"], 10);
    assert_eq!(lines[1]["zeros"].as_array().unwrap().len(), 10);
}

#[test]
fn config_errors_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"nonsense": 1}"#).unwrap();
    let o = gef(&["sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"], "config");
    assert_eq!(e["exit_code"], 2);

    let o = gef(&["measures", "--p", "1.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["exit_code"], 2);

    assert_eq!(gef(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(gef(&["sample", "--r", "2", "--l", "2"]).status.code(), Some(2));
}

#[test]
fn optimize_writes_grid_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.json");
    let o = gef(&["optimize", "--p", "0", "--alpha", "10", "--shells", "150", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["meta"]["command"], "optimize");
    let trace = dir.path().join("grid.trace.csv");
    assert!(Path::new(&trace).exists());
    assert!(!csv_body(&std::fs::read_to_string(trace).unwrap()).is_empty());
}

#[test]
fn construction_counts_match() {
    let o = gef(&["construct", "--r", "3", "--p", "0.5", "--count", "5", "--seed", "2"]);
    assert!(o.status.success());
    let lines = ndjson(&stdout(&o));
    assert_eq!(lines.len(), 6);
    for rec in &lines[1..] {
        if rec["certified"] == true {
            assert_eq!(rec["zero_count"], rec["k0"]);
        }
    }
    assert_eq!(gef(&["construct", "--r", "2", "--count", "1"]).status.code(), Some(2));
}

#[test]
fn hole_chain_respects_the_hole() {
    let o = gef(&["hole-mcmc", "--n", "8", "--l", "1", "--burn-in", "50", "--sweeps", "200", "--thin", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = ndjson(&stdout(&o));
    assert!(lines.len() > 1);
    for rec in &lines[1..] {
        for z in rec["zeros"].as_array().unwrap() {
            let (x, y) = (z[0].as_f64().unwrap(), z[1].as_f64().unwrap());
            assert!(x.hypot(y) >= 1.0);
        }
    }
}

#[test]
fn verify_fast_passes() {
    let o = gef(&["verify", "--fast", "--format", "json"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let checks = doc["data"]["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    assert!(checks.iter().all(|c| c["pass"] == true));
}
