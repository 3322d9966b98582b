use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn network(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../networks").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crnkit")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON value")
}

#[test]
fn analyze_reports_structure() {
    let out = run(&["analyze", network("fork.crn").to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["n"], 3);
    assert_eq!(v["m"], 3);
    assert_eq!(v["ell"], 1);
    assert_eq!(v["weakly_reversible"], false);
    assert_eq!(v["deficiency"], 0);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys[..6], ["n", "m", "ell", "weakly_reversible", "deficiency", "stoich_rank"]);
}

#[test]
fn steady_state_of_reversible_pair() {
    let file = network("reversible_pair.crn");
    let out = run(&["steady-state", file.to_str().unwrap(), "--point", "1.5,1.5", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let x: Vec<f64> = v["x"].as_array().unwrap().iter().map(|e| e.as_f64().unwrap()).collect();
    assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9, "{x:?}");
    assert!(v["residual_species"].as_f64().unwrap() <= 1e-10);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("e0,"), "floats use exponent notation: {text}");
}

#[test]
fn steady_state_refuses_fork() {
    let out = run(&["steady-state", network("fork.crn").to_str().unwrap(), "--point", "1,1,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn steady_state_rejects_wrong_dimension() {
    let out = run(&["steady-state", network("cycle.crn").to_str().unwrap(), "--point", "1,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_errors_exit_with_one() {
    let dir = std::env::temp_dir().join(format!("crnkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.crn");
    std::fs::write(&bad, "A -> B : 1\nA => B : 2\n").unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains('2'), "line number reported: {err}");
    let missing = run(&["analyze", dir.join("missing.crn").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn simulate_writes_csv() {
    let dir = std::env::temp_dir().join(format!("crnkit-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("traj.csv");
    let out = run(&[
        "simulate",
        network("reversible_pair.crn").to_str().unwrap(),
        "--x0",
        "3,0.001",
        "--t-end",
        "50",
        "--json",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["converged"], true);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,A,B"));
    assert_eq!(lines.count(), v["steps"].as_u64().unwrap() as usize + 1);
}

#[test]
fn verify_counterexample_is_positive() {
    let out = run(&["verify", "counterexample", "--samples", "200", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["check"], "counterexample");
    assert_eq!(v["positive"], true);
    assert!(v["violations"].as_u64().unwrap() >= 1);
}

#[test]
fn verify_omega_and_lemmas() {
    let file = network("two_pairs.crn");
    let out = run(&["verify", "omega", file.to_str().unwrap(), "--point", "1,2", "--samples", "300", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["violations"], 0);
    assert!(v["thresholds"]["radii"].as_array().unwrap().len() == 3);

    let out = run(&["verify", "lemmas", network("reversible_pair.crn").to_str().unwrap(), "--samples", "300"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify", "omega", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
