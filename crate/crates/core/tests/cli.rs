use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclingam")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const EXAMPLE_MODEL: &str = r#"{"p": 3, "edges": [[1, 2, 3.0]], "omega2": [1, 2, 1], "omega3": [1, 2, 1]}"#;

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", EXAMPLE_MODEL);
    let a = cli(&["simulate", "--model", &model, "--n", "200", "--seed", "9"]);
    let b = cli(&["simulate", "--model", &model, "--n", "200", "--seed", "9"]);
    let c = cli(&["simulate", "--model", &model, "--n", "200", "--seed", "10"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 201);
}

#[test]
fn population_pipeline_recovers_example_edge() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", EXAMPLE_MODEL);
    let moments = dir.path().join("moments.json");
    let out = cli(&["moments", "--model", &model, "--out", moments.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = cli(&["discover", "--moments", moments.to_str().unwrap(), "--mode", "population", "--tol", "1e-9"]);
    assert!(out.status.success());
    let res: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(res["status"], "complete");
    assert_eq!(res["edges"], serde_json::json!([[1, 2, 3.0]]));

    // Replaying the same moments gives byte-identical output.
    let again = cli(&["discover", "--moments", moments.to_str().unwrap(), "--mode", "population", "--tol", "1e-9"]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn sample_pipeline_runs() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "m.json",
        r#"{"p": 3, "edges": [[1, 2, 0.7], [2, 3, 0.6]], "omega2": [1, 1, 1], "omega3": [1, 1, 1]}"#,
    );
    let data = dir.path().join("x.csv");
    let out = cli(&["simulate", "--model", &model, "--n", "20000", "--seed", "1", "--out", data.to_str().unwrap()]);
    assert!(out.status.success());
    let out = cli(&["discover", "--data", data.to_str().unwrap(), "--mode", "sample", "--center"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(res["status"], "complete");
    assert!(res["diagnostics"]["records"].as_array().unwrap().len() > 0);
}

#[test]
fn equiv_lists_three_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.json", r#"{"p": 4, "edges": [[1, 2], [2, 3], [3, 4], [4, 1], [2, 4]]}"#);
    let out = cli(&["equiv", "--graph", &graph]);
    assert!(out.status.success());
    let class: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(class.as_array().map(Vec::len), Some(3));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.csv");
    let out = cli(&[
        "bench", "--p", "6", "--reps", "2", "--mode", "population", "--summary", summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = String::from_utf8(out.stdout).unwrap();
    assert_eq!(records.lines().count(), 3);
    assert!(records.starts_with("rep,n,p,dist,alpha,correction,ordering_ok,correct_pairs,runtime_s,status"));
    let s = fs::read_to_string(summary).unwrap();
    assert!(s.lines().nth(1).unwrap().contains(",2,1.0,1.0,"), "{s}");
}

#[test]
fn exit_codes() {
    let out = cli(&["discover", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--bogus"));

    let out = cli(&["moments", "--data", "/nonexistent/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/x.csv"));

    // I - Lambda singular: 1 -> 2 -> 1 with product 1.
    let dir = tempfile::tempdir().unwrap();
    let model =
        write(dir.path(), "m.json", r#"{"p": 2, "edges": [[1, 2, 1.0], [2, 1, 1.0]], "omega2": [1, 1], "omega3": [1, 1]}"#);
    let out = cli(&["moments", "--model", &model]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}
