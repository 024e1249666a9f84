use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn cutgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutgraph")).args(args).env_remove("CUT_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn run_prints_trace() {
    let o = cutgraph(&["run", corpus("div.pl").to_str().unwrap(), "div(0, 0, Z)"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("Case failure(a)^4_2 | ?_2 | ?_1"));
    assert!(out.contains("Fail ε"));
    assert!(out.contains("terminated after 7 steps, 0 answers"));
}

#[test]
fn run_reports_answers() {
    let o = cutgraph(&["run", corpus("div.pl").to_str().unwrap(), "div(s(s(0)), s(0), Z)"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("answer {Z/s(s(0))}"), "{}", stdout(&o));
}

#[test]
fn run_budget_and_stuck() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "p.pl", "p :- p.\nq(X) :- X.\n");
    assert_eq!(cutgraph(&["run", &f, "p", "--budget", "50"]).status.code(), Some(2));
    assert_eq!(cutgraph(&["run", &f, "q(Y)"]).status.code(), Some(3));
}

#[test]
fn empty_query_terminates_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "p.pl", "p.\n");
    let o = cutgraph(&["run", &f, ""]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("Suc ε\n"), "{out}");
    assert!(out.contains("terminated after 1 steps, 1 answers"));
}

#[test]
fn parse_error_has_location() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "bad.pl", "p(f(!)).\n");
    let o = cutgraph(&["validate", &f, "--query", "p(v)"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:5"));
}

#[test]
fn missing_query_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "p.pl", "p.\n");
    assert_eq!(cutgraph(&["graph", &f]).status.code(), Some(1));
}

#[test]
fn transform_div() {
    let o = cutgraph(&["transform", corpus("div.pl").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("%query: div_a(g,g,v)\n"));
    assert_eq!(out.lines().count(), 8);
    assert!(!out.contains('!'));
}

#[test]
fn transform_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.pl");
    let o = cutgraph(&["transform", corpus("pqr.pl").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let golden = std::fs::read_to_string(corpus("pqr.golden/program.pl")).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap(), golden);
}

#[test]
fn improper_graph_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "v.pl", "p(X) :- X.\n");
    assert_eq!(cutgraph(&["validate", &f, "--query", "p(v)"]).status.code(), Some(0));
    assert_eq!(cutgraph(&["transform", &f, "--query", "p(v)"]).status.code(), Some(6));
}

#[test]
fn node_budget_exit_code() {
    let o = cutgraph(&["graph", corpus("div.pl").to_str().unwrap(), "--max-nodes", "5"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn graph_formats() {
    let f = corpus("p_succ.pl");
    let dot = stdout(&cutgraph(&["graph", f.to_str().unwrap(), "--format", "dot"]));
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("style=dashed"));
    let json = stdout(&cutgraph(&["graph", f.to_str().unwrap(), "--format", "json"]));
    assert_eq!(json, std::fs::read_to_string(corpus("p_succ.golden/graph.json")).unwrap());
    let text = stdout(&cutgraph(&["graph", f.to_str().unwrap()]));
    assert!(text.ends_with("4 nodes, proper: true\n"));
}

#[test]
fn query_flag_overrides_directive() {
    let f = corpus("p_succ.pl");
    let text = stdout(&cutgraph(&["graph", f.to_str().unwrap(), "--query", "p(v)"]));
    assert!(text.starts_with("a: p(T1) ; ({}, {})"), "{text}");
}

#[test]
fn check_corpus_passes() {
    let o = cutgraph(&["check", corpus("").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));
}

#[test]
fn check_single_file() {
    let o = cutgraph(&["check", corpus("p_split.pl").to_str().unwrap(), "--samples", "5"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn zero_samples_warns() {
    let o = cutgraph(&["check", corpus("pqr.pl").to_str().unwrap(), "--samples", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn seed_is_deterministic() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_cutgraph"))
            .args(["check", corpus("div.pl").to_str().unwrap(), "--samples", "5"])
            .env("CUT_SEED", seed)
            .output()
            .unwrap()
    };
    assert_eq!(run("11").stdout, run("11").stdout);
}

#[test]
fn zero_budget_is_rejected() {
    let o = cutgraph(&["run", corpus("div.pl").to_str().unwrap(), "div(0,0,Z)", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
    assert_eq!(cutgraph(&["--help"]).status.code(), Some(0));
}
