//! End-to-end runs of the `chansense` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chansense"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let out = ok(&["validate", s(&scenario("wban.json"))]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "OK\n");

    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("bad.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(run(&["validate", s(&garbage)]).status.code(), Some(1));
    assert_eq!(
        run(&["validate", s(&dir.path().join("missing.json"))])
            .status
            .code(),
        Some(1)
    );

    let mut doc = json(&scenario("twostate.json"));
    doc["transition"][0][0] = Value::from(0.9);
    let invalid = dir.path().join("invalid.json");
    std::fs::write(&invalid, doc.to_string()).unwrap();
    let out = run(&["validate", s(&invalid)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn solve_writes_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve");
    ok(&[
        "solve",
        "--scenario",
        s(&scenario("twostate.json")),
        "--lambda",
        "0.5",
        "--grid",
        "5",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    let bounds = json(&out.join("bounds.json"));
    assert_eq!(bounds["points"].as_array().unwrap().len(), 6);
    let lb = bounds["lower_bound_reward"].as_f64().unwrap();
    let ub = bounds["upper_bound_reward"].as_f64().unwrap();
    assert!(lb <= ub + 1e-12, "{lb} > {ub}");
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["seeds"][0].as_u64(), Some(1));
    assert_eq!(manifest["scenario_sha256"].as_str().unwrap().len(), 64);
    assert!(out.join("solution.json").exists());
}

#[test]
fn discounted_point_bounds_are_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("disc");
    ok(&[
        "solve",
        "--scenario",
        s(&scenario("twostate.json")),
        "--lambda",
        "0.3",
        "--grid",
        "8",
        "--mode",
        "disc:0.9",
        "--seed",
        "2",
        "--out",
        s(&out),
    ]);
    let bounds = json(&out.join("bounds.json"));
    assert_eq!(bounds["relative_values"].as_bool(), Some(false));
    for p in bounds["points"].as_array().unwrap() {
        let (l, u) = (p["lower"].as_f64().unwrap(), p["upper"].as_f64().unwrap());
        assert!(l <= u + 1e-3, "{p}");
    }
}

#[test]
fn lambda_one_solution_uses_cheapest_sensor() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("l1");
    ok(&[
        "solve",
        "--scenario",
        s(&scenario("wban.json")),
        "--lambda",
        "1",
        "--grid",
        "2",
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    let sol = json(&out.join("solution.json"));
    for a in sol["policy"]["actions"].as_array().unwrap() {
        assert_eq!(a, &serde_json::json!([1, 0, 0]));
    }
    let table = out.join("solution.json");
    let metrics = dir.path().join("metrics.json");
    let trace = dir.path().join("trace.csv");
    ok(&[
        "simulate",
        "--table",
        s(&table),
        "--scenario",
        s(&scenario("wban.json")),
        "--episodes",
        "3",
        "--horizon",
        "40",
        "--seed",
        "9",
        "--out",
        s(&metrics),
        "--trace",
        s(&trace),
    ]);
    let m = json(&metrics);
    assert_eq!(m["usage"], serde_json::json!([1.0, 0.0, 0.0]));
    assert!((m["energy"].as_f64().unwrap() - 0.58).abs() < 1e-12);
    let lines = std::fs::read_to_string(&trace).unwrap().lines().count();
    assert_eq!(lines, 1 + 3 * 40);

    let mismatch = run(&[
        "simulate",
        "--table",
        s(&table),
        "--scenario",
        s(&scenario("twostate.json")),
        "--seed",
        "9",
        "--out",
        s(&dir.path().join("m2.json")),
    ]);
    assert_eq!(mismatch.status.code(), Some(4));
}

#[test]
fn greedy_schedule_solves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("greedy");
    ok(&[
        "solve",
        "--scenario",
        s(&scenario("wban.json")),
        "--lambda",
        "0.2",
        "--grid",
        "2",
        "--improve",
        "greedy:1,1,1,1,1,1",
        "--seed",
        "4",
        "--out",
        s(&out),
    ]);
    let sol = json(&out.join("solution.json"));
    assert_eq!(sol["policy"]["actions"].as_array().unwrap().len(), 10);
}

#[test]
fn sweep_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        ok(&[
            "--threads",
            threads,
            "sweep",
            "--scenario",
            s(&scenario("wban.json")),
            "--lambdas",
            "0,1",
            "--modes",
            "optimal",
            "--grid",
            "2",
            "--episodes",
            "3",
            "--horizon",
            "100",
            "--seed",
            "5",
            "--out",
            s(&path),
        ]);
        std::fs::read(path).unwrap()
    };
    let a = sweep("a.csv", "1");
    let b = sweep("b.csv", "3");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header.len(), 9 + 3);
    let energy = header.iter().position(|h| *h == "energy").unwrap();
    let last: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(last[0], "1");
    assert!((last[energy].parse::<f64>().unwrap() - 0.58).abs() < 1e-9);
    assert!(dir.path().join("a.csv.manifest.json").exists());
}

#[test]
fn bad_arguments_are_usage_errors() {
    let out = run(&[
        "sweep",
        "--scenario",
        s(&scenario("wban.json")),
        "--lambdas",
        "0:0.5:2",
        "--modes",
        "optimal",
        "--seed",
        "1",
        "--out",
        "/dev/null",
    ]);
    assert_ne!(out.status.code(), Some(0));
    let out = run(&[
        "sweep",
        "--scenario",
        s(&scenario("wban.json")),
        "--lambdas",
        "0",
        "--modes",
        "nope",
        "--seed",
        "1",
        "--out",
        "/dev/null",
    ]);
    assert_ne!(out.status.code(), Some(0));
}
