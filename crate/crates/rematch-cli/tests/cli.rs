//! End-to-end checks of the `rematch` binary: exit codes, report text,
//! JSON output, and trace files.

use std::io::BufReader;
use std::process::{Command, Output};

use rematch_core::scenario::find_builtin;
use rematch_core::trace::read_trace;

fn rematch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rematch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).expect("stdout is JSON")
}

#[test]
fn validate_accepts_every_bundled_scenario() {
    for name in ["example1", "example2", "example3", "example4", "example5", "example6", "example7", "example8"] {
        let out = rematch(&["validate", name]);
        assert_eq!(out.status.code(), Some(0), "{}: {}", name, stderr(&out));
        assert!(stdout(&out).starts_with("ok:"), "{}", name);
    }
}

#[test]
fn validate_rejects_a_monotone_agreement_break() {
    // w1>w2 at both single-characteristic spaces, reversed at their join.
    let broken = r#"{
  "schema_version": "1",
  "name": "broken",
  "players": { "men": ["m1", "m2"], "women": ["w1", "w2"] },
  "characteristics": ["c1", "c2"],
  "preferences": {
    "m1": { "base": ["w1", "w2"], "c1": ["w1", "w2"], "c2": ["w1", "w2"], "c1+c2": ["w2", "w1"] },
    "m2": { "base": ["w2", "w1"], "c1": ["w2", "w1"], "c2": ["w2", "w1"], "c1+c2": ["w2", "w1"] },
    "w1": { "base": ["m1", "m2"], "c1": ["m1", "m2"], "c2": ["m1", "m2"], "c1+c2": ["m1", "m2"] },
    "w2": { "base": ["m2", "m1"], "c1": ["m2", "m1"], "c2": ["m2", "m1"], "c1+c2": ["m2", "m1"] }
  },
  "rules": [],
  "initial": {
    "matching": {},
    "awareness": { "m1": [], "m2": [], "w1": [], "w2": [] }
  }
}"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, broken).unwrap();
    let out = rematch(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stdout(&out).contains("violation"));
}

#[test]
fn validate_missing_file_is_a_usage_error() {
    let out = rematch(&["validate", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_value_is_a_usage_error() {
    let out = rematch(&["simulate", "example1", "--process", "zzz"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_reports_the_hidden_blocking_pair() {
    let out = rematch(&["check", "example3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("stable: true"));
    assert!(text.contains("self-confirming: true"));
    assert!(text.contains("blocking pair (m1,w2) exists but lacks pairwise common belief"));
}

#[test]
fn check_json_names_the_flirt_witness() {
    let out = rematch(&["check", "example6", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["self_confirming"], true);
    assert_eq!(doc["flirt_proof_self_confirming"], false);
    let notes = doc["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("flirt w2 -> m1")));
}

#[test]
fn check_rejects_a_malformed_matching() {
    let out = rematch(&["check", "example3", "--matching", "m1:zz"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown player"));
}

#[test]
fn simulate_writes_a_readable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.trace");
    let out = rematch(&[
        "simulate",
        "example4",
        "--process",
        "p",
        "--epsilon",
        "0.1",
        "--seed",
        "1",
        "--trace",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["terminal"]["matching"], "{m1-w2, m2-w1}");
    assert_eq!(doc["converged"], true);

    let file = std::fs::File::open(&path).unwrap();
    let (header, records) = read_trace(BufReader::new(file)).unwrap();
    let sc = find_builtin("example4").unwrap();
    assert_eq!(header.digest, sc.digest());
    assert_eq!(header.process, "p");
    let last = records.last().unwrap();
    assert_eq!(last.kind, "terminal");
    assert_eq!(last.matching["m1"], Some("w2".to_string()));
    assert_eq!(last.matching["m2"], Some("w1".to_string()));
}

#[test]
fn simulate_classic_reports_the_cycle() {
    let out = rematch(&["simulate", "example2", "--process", "classic", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["verdict"], "cycle");
    assert_eq!(doc["cycle"]["entry"], 1);
    assert_eq!(doc["cycle"]["period"], 8);
}

#[test]
fn simulate_nonconvergence_exits_one() {
    let out = rematch(&[
        "simulate",
        "example1",
        "--process",
        "p",
        "--epsilon",
        "0.2",
        "--max-steps",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("converged: false"));
    assert!(stderr(&out).contains("did not converge"));
}

#[test]
fn enumerate_counts_match_the_library() {
    let out = rematch(&["enumerate", "example5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["count"], 10);

    let out = rematch(&["enumerate", "example6", "--flirt-proof", "--format", "json"]);
    let doc = json(&out);
    assert_eq!(doc["count"], 16);
    for o in doc["outcomes"].as_array().unwrap() {
        let m = o["matching"].as_str().unwrap();
        assert!(m == "{m1-w1, m2-w2}" || m == "{m1-w2, m2-w1}");
    }
}

#[test]
fn enumerate_bound_exceeded_exits_one() {
    let out = rematch(&["enumerate", "example8", "--bound", "100"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("over the bound"));
}

#[test]
fn montecarlo_classic_always_stabilizes() {
    let out = rematch(&[
        "montecarlo",
        "example2",
        "--process",
        "classic",
        "--epsilon",
        "0.1",
        "--runs",
        "50",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["nonconverged"], 0);
    let total: u64 = doc["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["runs"].as_u64().unwrap())
        .sum();
    assert_eq!(total, 50);
}

#[test]
fn montecarlo_is_deterministic_given_the_seed() {
    let args = [
        "montecarlo",
        "example1",
        "--process",
        "p",
        "--epsilon",
        "0.3",
        "--runs",
        "20",
        "--seed",
        "7",
    ];
    let first = rematch(&args);
    let second = rematch(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn welfare_tallies_cover_every_run() {
    let out = rematch(&[
        "welfare",
        "example8",
        "--player",
        "m1",
        "--runs",
        "30",
        "--epsilon",
        "0.2",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    let sum = doc["better"].as_u64().unwrap()
        + doc["same"].as_u64().unwrap()
        + doc["worse"].as_u64().unwrap()
        + doc["nonconverged"].as_u64().unwrap();
    assert_eq!(sum, 30);
}

#[test]
fn export_graph_emits_dot_with_an_absorbing_node() {
    let out = rematch(&["export-graph", "example4", "--process", "p", "--epsilon", "0.25"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("digraph"));
    assert!(text.contains("peripheries=2"));
    assert!(text.contains("{m1-w2, m2-w1}"));
}

#[test]
fn export_graph_bound_exceeded_exits_one() {
    let out = rematch(&["export-graph", "example8", "--bound", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("over the bound"));
}
