mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use entropy_coreset::dataset::load_selection_ids;
use entropy_coreset::{load_score_table, rank, top_m, Order};
use tempfile::tempdir;

fn coreset(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coreset"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = coreset(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fail(dir: &Path, args: &[&str]) -> String {
    let out = coreset(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

#[test]
fn score_pipeline_builds_up_one_table() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    common::build_dataset(d);
    ok(d, &["score", "--manifest", "manifest.jsonl", "--which", "bpp", "--out", "scores.csv"]);
    let text = fs::read_to_string(d.join("scores.csv")).unwrap();
    assert!(text.starts_with("# bpp: score which=bpp"), "{text}");
    assert!(text.contains("quality=100"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 13);

    let err = fail(d, &["score", "--manifest", "manifest.jsonl", "--which", "cpx", "--out", "scores.csv"]);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[missing-input]:"), "{err}");
    assert!(err.contains("cpx requires nll"), "{err}");

    ok(d, &[
        "score", "--manifest", "manifest.jsonl", "--which", "cpx", "--scores", "nll.csv",
        "--out", "scores.csv",
    ]);
    ok(d, &[
        "score", "--manifest", "manifest.jsonl", "--which", "ps", "--features", "features.csv",
        "--num-classes", "3", "--out", "scores.csv",
    ]);
    let t = load_score_table(d.join("scores.csv")).unwrap();
    let names: Vec<&str> = t.column_names().collect();
    assert_eq!(names, ["bpp", "nll", "cpx", "ps"]);
    for i in 0..t.len() {
        assert_eq!(t.column("cpx").unwrap()[i], t.column("nll").unwrap()[i] - t.column("bpp").unwrap()[i]);
    }
    assert!(t.provenance("ps").unwrap().contains("k=3"));
}

#[test]
fn ps_without_features_or_k_is_refused() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    common::build_dataset(d);
    let e = fail(d, &["score", "--manifest", "manifest.jsonl", "--which", "ps", "--out", "s.csv"]);
    assert!(e.contains("--features"), "{e}");
    let e = fail(d, &[
        "score", "--manifest", "manifest.jsonl", "--which", "ps", "--features", "features.csv",
        "--out", "s.csv",
    ]);
    assert!(e.contains("--k"), "{e}");
}

#[test]
fn select_without_graph_equals_plain_ranking() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    common::build_dataset(d);
    ok(d, &["score", "--manifest", "manifest.jsonl", "--which", "bpp", "--out", "s.csv"]);
    ok(d, &[
        "select", "--manifest", "manifest.jsonl", "--scores", "s.csv", "--score", "bpp",
        "--order", "asc", "--graph", "none", "--fraction", "0.25", "--out", "sel.csv",
    ]);
    let t = load_score_table(d.join("s.csv")).unwrap();
    let expected = top_m(&rank(t.column("bpp").unwrap(), Order::Ascending).unwrap(), 3)
        .unwrap()
        .with_ids(t.ids())
        .unwrap();
    let got = load_selection_ids(d.join("sel.csv")).unwrap();
    let want: Vec<String> = expected.entries.iter().map(|e| e.id.clone()).collect();
    assert_eq!(got, want);
}

#[test]
fn order_has_no_default() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    common::build_dataset(d);
    ok(d, &["score", "--manifest", "manifest.jsonl", "--which", "bpp", "--out", "s.csv"]);
    let e = fail(d, &[
        "select", "--manifest", "manifest.jsonl", "--scores", "s.csv", "--score", "bpp",
        "--graph", "none", "--count", "3", "--out", "sel.csv",
    ]);
    assert!(e.starts_with("error[invalid-argument]"), "{e}");
    assert!(e.contains("--order"), "{e}");
    assert_eq!(e.lines().count(), 1, "{e}");
}

#[test]
fn cached_edges_reproduce_an_inline_graph() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    common::build_dataset(d);
    ok(d, &["score", "--manifest", "manifest.jsonl", "--which", "bpp", "--out", "s.csv"]);
    ok(d, &[
        "graph", "--manifest", "manifest.jsonl", "--graph", "histogram", "--num-classes", "3",
        "--knn", "3", "--out", "edges.csv", "--histograms-out", "hist.csv",
    ]);
    let edges = fs::read_to_string(d.join("edges.csv")).unwrap();
    assert!(edges.starts_with("# graph "), "{edges}");
    assert!(edges.contains("metric=jsd"));
    assert!(fs::read_to_string(d.join("hist.csv")).unwrap().contains("ignore_index=255"));

    let common_args = [
        "select", "--manifest", "manifest.jsonl", "--scores", "s.csv", "--score", "bpp",
        "--order", "desc", "--count", "5",
    ];
    let mut a = common_args.to_vec();
    a.extend(["--edges", "edges.csv", "--out", "a.csv"]);
    ok(d, &a);
    let mut b = common_args.to_vec();
    b.extend(["--graph", "histogram", "--num-classes", "3", "--knn", "3", "--out", "b.csv"]);
    ok(d, &b);
    assert_eq!(
        load_selection_ids(d.join("a.csv")).unwrap(),
        load_selection_ids(d.join("b.csv")).unwrap()
    );
}

#[test]
fn graph_arguments_are_checked() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    common::build_dataset(d);
    let e = fail(d, &["graph", "--manifest", "manifest.jsonl", "--graph", "features", "--knn", "3", "--out", "e.csv"]);
    assert!(e.contains("--features"), "{e}");
    let e = fail(d, &["graph", "--manifest", "manifest.jsonl", "--graph", "histogram", "--knn", "3", "--out", "e.csv"]);
    assert!(e.contains("--num-classes"), "{e}");
    let e = fail(d, &[
        "graph", "--manifest", "manifest.jsonl", "--graph", "histogram", "--num-classes", "2",
        "--knn", "3", "--out", "e.csv",
    ]);
    assert!(e.starts_with("error[label-out-of-range]"), "{e}");
    let e = fail(d, &[
        "graph", "--manifest", "manifest.jsonl", "--graph", "features", "--features",
        "features.csv", "--knn", "12", "--out", "e.csv",
    ]);
    assert!(e.contains("K must be"), "{e}");
}

#[test]
fn stats_reports_coverage() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    common::build_dataset(d);
    ok(d, &["score", "--manifest", "manifest.jsonl", "--which", "bpp", "--out", "s.csv"]);
    ok(d, &[
        "graph", "--manifest", "manifest.jsonl", "--graph", "features", "--features",
        "features.csv", "--knn", "4", "--out", "edges.csv",
    ]);
    ok(d, &[
        "select", "--manifest", "manifest.jsonl", "--scores", "s.csv", "--score", "bpp",
        "--order", "desc", "--edges", "edges.csv", "--count", "4", "--out", "sel.csv",
    ]);
    let out = ok(d, &[
        "stats", "--scores", "s.csv", "--score", "bpp", "--manifest", "manifest.jsonl",
        "--selection", "sel.csv", "--edges", "edges.csv",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["count"], 12);
    assert_eq!(v["coverage"]["selected"], 4);
    assert!(v["coverage"]["one_hop_coverage"].as_f64().unwrap() > 0.0);
}

#[test]
fn synth_reports_both_policies() {
    let dir = tempdir().unwrap();
    let out = ok(dir.path(), &["synth", "--seed", "1"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let run = &v["runs"][0];
    assert_eq!(run["policies"][0]["policy"], "score");
    assert_eq!(run["policies"][0]["clusters_covered"], 1);
    assert!(run["policies"][1]["clusters_covered"].as_u64().unwrap() >= 1);
    let e = fail(dir.path(), &["synth", "--clusters", "0"]);
    assert!(e.starts_with("error[invalid-argument]"), "{e}");
}

#[test]
fn missing_manifest_is_an_io_error() {
    let dir = tempdir().unwrap();
    let e = fail(dir.path(), &["score", "--manifest", "nope.jsonl", "--which", "bpp", "--out", "s.csv"]);
    assert!(e.starts_with("error[io]: nope.jsonl"), "{e}");
}
