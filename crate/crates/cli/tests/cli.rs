//! End-to-end runs of the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wreath-hecke"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

#[test]
fn types_listing_is_exact_and_stable() {
    let tiny = run(&["types", "--k", "2", "--max-vertices", "0"]);
    assert!(tiny.status.success());
    let tiny_body = stdout(&tiny);
    let lines: Vec<&str> = tiny_body.lines().map(str::trim_end).collect();
    assert_eq!(lines.len(), 1, "the empty type is the single listing line");
    assert!(lines[0].starts_with("v0:"));
    assert!(lines[0].contains("weight=0"));

    let first = run(&["types", "--k", "2", "--max-vertices", "4", "--format", "csv"]);
    let second = run(&["types", "--k", "2", "--max-vertices", "4", "--format", "csv"]);
    assert!(first.status.success());
    assert_eq!(stdout(&first), stdout(&second), "canonical ordering is run-stable");
    let body = stdout(&first);
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("key,vertices,components,weight,partition"));
    // v0, the pair type, the triangle, and the two four-vertex types.
    assert_eq!(lines.count(), 5);
    assert!(body.contains("v4:1.2|1.2|3.4|3.4,4,2,2,2+2"));

    let weighted = run(&["types", "--k", "3", "--max-weight", "1", "--format", "json"]);
    assert!(weighted.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&weighted)).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["count"], 2);
    assert_eq!(doc["types"][1]["key"], "v2:1.1.2|1.2.2");
    assert_eq!(doc["types"][1]["partition"], serde_json::json!([2]));
}

#[test]
fn types_requires_exactly_one_bound() {
    let neither = run(&["types", "--k", "2"]);
    assert!(!neither.status.success());
    let both = run(&["types", "--k", "2", "--max-vertices", "3", "--max-weight", "1"]);
    assert!(!both.status.success());
}

#[test]
fn table_cross_checks_engines_and_carries_the_unit_row() {
    let out = run(&["table", "--k", "2", "--n", "2", "--engine", "both"]);
    assert!(out.status.success());
    let body = stdout(&out);
    assert!(body.starts_with("k,n,M_key,N_key,L_key,value,engine\n"));
    // (∅, M, M) rows carry 1 from both engines.
    assert!(body.contains("2,2,v0:,v2:1.2|1.2,v2:1.2|1.2,1,oracle"));
    assert!(body.contains("2,2,v0:,v2:1.2|1.2,v2:1.2|1.2,1,centralizer"));
    let rows = body.lines().count() - 1;
    // Two types at n = 2, eight triples, two engines each.
    assert_eq!(rows, 16);
}

#[test]
fn table_json_reports_the_schema() {
    let out = run(&["table", "--k", "3", "--n", "2", "--engine", "centralizer", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["k"], 3);
    // Two types live at (3, 2): eight triples from one engine.
    assert_eq!(doc["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn table_refuses_the_oracle_past_its_ceiling() {
    let out = run(&["table", "--k", "2", "--n", "6", "--engine", "oracle"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("kn = 12 exceeds 10"), "stderr: {}", stderr(&out));
}

#[test]
fn warm_cache_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let cold = run(&["table", "--k", "2", "--n", "3", "--cache-dir", cache]);
    assert!(cold.status.success());
    let artifact = Path::new(cache).join("table-k2-n3-both-v1.csv");
    assert!(artifact.exists(), "cache file is populated");
    let warm = run(&["table", "--k", "2", "--n", "3", "--cache-dir", cache]);
    assert!(warm.status.success());
    assert_eq!(stdout(&cold), stdout(&warm));
    assert_eq!(stdout(&cold), std::fs::read_to_string(&artifact).unwrap());
}

#[test]
fn fit_validates_holdouts_and_prints_the_quadratic() {
    let out = run(&["fit", "--k", "2", "--max-weight", "1"]);
    assert!(out.status.success());
    let body = stdout(&out);
    assert!(body.contains("M=v0: N=v0: L=v0:  c(n) = 1"));
    assert!(body.contains("c(n) = n^2 - n  [(n)_2]"));
    assert!(body.contains("fits: 20 validated, 0 failed, 0 skipped"));
}

#[test]
fn fit_skips_triples_the_oracle_cannot_reach() {
    let out = run(&["fit", "--k", "3", "--max-weight", "1", "--engine", "oracle", "--format", "csv"]);
    assert!(out.status.success(), "skips are not failures");
    let body = stdout(&out);
    assert!(body.lines().any(|l| l.ends_with(",skipped")), "some holdout exceeds kn = 10");
    let rejected = run(&["fit", "--k", "2", "--max-weight", "1", "--engine", "both"]);
    assert_eq!(rejected.status.code(), Some(2));
}

#[test]
fn verify_passes_on_the_small_range() {
    let out = run(&["verify", "--k", "2", "--max-weight", "1", "--n-range", "2:4", "--seed", "3"]);
    assert!(out.status.success());
    let body = stdout(&out);
    assert!(body.contains("verify: ok"));
    assert!(body.contains("evolution at n = 4"));

    let json = run(&[
        "verify", "--k", "2", "--max-weight", "1", "--n-range", "2:3", "--seed", "3", "--format",
        "json",
    ]);
    assert!(json.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["ok"], true);
    assert!(doc["reports"].as_array().unwrap().len() > 10);
}

#[test]
fn verify_rejects_a_backward_range() {
    let out = run(&["verify", "--k", "2", "--max-weight", "1", "--n-range", "5:2"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("invalid level range"));
}

#[test]
fn evolve_emits_a_passing_summary() {
    let out = run(&["evolve", "--k", "2", "--n", "3", "--seed", "11", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["pairs"], 1000);
    assert_eq!(doc["failures"], serde_json::json!([]));
    assert!(doc["equality_cases"].as_u64().unwrap() > 0);
}
