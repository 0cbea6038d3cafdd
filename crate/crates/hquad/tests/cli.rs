use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hquad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hquad")).args(args).output().expect("binary runs")
}

fn example_file(dir: &Path, id: &str) -> String {
    let out = hquad(&["example", id]);
    assert_eq!(out.status.code(), Some(0));
    let path = dir.join(format!("{id}.json"));
    std::fs::write(&path, &out.stdout).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_example_3_7() {
    let dir = tempfile::tempdir().unwrap();
    let f = example_file(dir.path(), "3.7");
    let out = hquad(&["solve", &f]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "optimal");
    assert!(v["objective_value"].as_f64().unwrap().abs() < 1e-7);
}

#[test]
fn solve_unbounded_example() {
    let dir = tempfile::tempdir().unwrap();
    let f = example_file(dir.path(), "4.4");
    let out = hquad(&["solve", &f]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "unbounded");
    assert!(v.get("ray").is_some());
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = example_file(dir.path(), "3.7");
    let text = std::fs::read_to_string(&f).unwrap();
    let cut = dir.path().join("cut.json");
    std::fs::write(&cut, &text[..text.len() / 2]).unwrap();
    let out = hquad(&["solve", cut.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let out = hquad(&["solve", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = hquad(&["example", "9.9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn example_round_trips_through_solve() {
    let out = hquad(&["example", "4.3", "--M", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let inst = hquad::io::parse_instance(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(inst.m(), 2);
}

#[test]
fn round_reports_seed_and_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let f = example_file(dir.path(), "m-example");
    let a = hquad(&["round", &f, "--seed", "7"]);
    let b = hquad(&["round", &f, "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stderr).contains("root seed 7"));
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["report"]["empirical_ratio"].as_f64().unwrap() >= 1.0);
}

#[test]
fn round_without_feasible_sample_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let f = example_file(dir.path(), "3.7");
    let out = hquad(&["round", &f, "--samples", "10"]);
    assert_eq!(out.status.code(), Some(4));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["empirical_ratio"], "inf");
}

#[test]
fn verify_single_lemma() {
    let out = hquad(&["verify", "--lemma", "L4_1", "--configs", "5", "--max-n", "8", "--samples", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["lemmas"].as_array().unwrap().len(), 1);
    assert_eq!(hquad(&["verify", "--lemma", "L9_9"]).status.code(), Some(2));
}

#[test]
fn empty_experiment_writes_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let o = hquad(&["experiment", "--instances-per-m", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "case,m,instance_seed,status,v_sdp,v_hat_qp,ratio,bound\n");
    let summary = std::fs::read_to_string(dir.path().join("run_summary.csv")).unwrap();
    assert!(summary.starts_with("root_seed,case,m,instances,"));
}

#[test]
fn experiment_is_reproducible_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_hquad"))
            .env("HQUAD_THREADS", threads)
            .args(["experiment", "--m-list", "3,4", "--instances-per-m", "3", "--n", "5", "--samples", "20"])
            .args(["--seed", "11", "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(&out).unwrap(), std::fs::read(dir.path().join(name.replace(".csv", "_summary.csv"))).unwrap())
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "2");
    assert_eq!(a, b);
    let text = String::from_utf8(a.0).unwrap();
    assert_eq!(text.lines().count(), 7);
    let summary = String::from_utf8(a.1).unwrap();
    assert!(summary.lines().skip(1).all(|l| l.starts_with("11,a,")));
}

#[test]
fn invalid_scheme_for_sense() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = hquad(&["experiment", "--sense", "max", "--scheme", "gaussian-min", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
