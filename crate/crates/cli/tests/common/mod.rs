#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

/// Recorded output file, arguments (run from the fixtures directory), expected exit status.
pub const CASES: &[(&str, &[&str], i32)] = &[
    ("validate_border.txt", &["validate", "border_state.json"], 0),
    ("validate_border.json", &["validate", "border_state.json", "--format", "json"], 0),
    ("validate_noncommutative.txt", &["validate", "noncommutative_state.json"], 0),
    ("mrp_bi.txt", &["mrp", "bi_tree.json"], 0),
    ("mrp_bi.dot", &["mrp", "bi_tree.json", "--format", "dot"], 0),
    ("mlp_figure.txt", &["mlp", "mlp_tree.json"], 0),
    ("mlp_figure.json", &["mlp", "mlp_tree.json", "--format", "json"], 0),
    ("mlp_figure.csv", &["mlp", "mlp_tree.json", "--format", "csv"], 0),
    ("distance_equal.txt", &["distance", "border_trees.json", "--spec", "border_distance_equal.json", "--epsilon", "0.2", "--center", "T"], 0),
    ("distance_weighted.csv", &["distance", "border_trees.json", "--spec", "border_distance_weighted.json", "--format", "csv"], 0),
    ("evaluate_border.txt", &["evaluate", "border_evaluation.json"], 0),
    ("evaluate_border.csv", &["evaluate", "border_evaluation.json", "--format", "csv"], 0),
    ("evaluate_border.json", &["evaluate", "border_evaluation.json", "--format", "json"], 0),
    ("evaluate_micro.dot", &["evaluate", "micro_evaluation.json", "--format", "dot"], 0),
    ("gen_border.txt", &["gen", "border_state.json", "--method", "border_method.json"], 0),
    ("gen_border.json", &["gen", "border_state.json", "--method", "border_method.json", "--format", "json"], 0),
    ("gen_border.dot", &["gen", "border_state.json", "--method", "border_method.json", "--format", "dot"], 0),
    ("gen_empty.json", &["gen", "border_state.json", "--method", "empty_method.json", "--format", "json"], 0),
    ("gen_empty.dot", &["gen", "border_state.json", "--method", "empty_method.json", "--format", "dot"], 0),
    ("gen_noncommutative.txt", &["gen", "noncommutative_state.json", "--method", "noncommutative_variant.json"], 0),
    (
        "update_border.txt",
        &["update", "border_state.json", "--records", "border_update.jsonl", "--manifest", "border_manifest.json", "--policy", "source-quality", "--trigger", "shooting=occurs"],
        0,
    ),
    (
        "update_noncommutative.txt",
        &[
            "update", "noncommutative_state.json", "--records", "noncommutative_update.jsonl",
            "--base", "noncommutative_base.json", "--variant", "noncommutative_variant.json", "--spec", "noncommutative_encoding.json",
        ],
        0,
    ),
    (
        "sweep_border.txt",
        &["sweep", "--state", "border_state.json", "--grid", "border_sweep_grid.json", "--functional", "border_functional.json", "--spec", "border_sweep_encoding.json"],
        0,
    ),
    (
        "sweep_border_trees.json",
        &["sweep", "--trees", "border_trees.json", "--grid", "border_sweep_grid.json", "--functional", "border_functional.json", "--spec", "border_distance_equal.json", "--format", "json"],
        0,
    ),
    ("ingest_border.txt", &["ingest", "border_update.jsonl", "--state", "border_state.json", "--manifest", "border_manifest.json"], 0),
    ("ingest_noncommutative.json", &["ingest", "noncommutative_update.jsonl", "--state", "noncommutative_state.json", "--format", "json"], 0),
    ("trace_border.txt", &["trace", "border_state.json"], 0),
];

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn run(args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_scenario")).args(args).current_dir(fixtures()).output().unwrap();
    (out.stdout, out.status.code().unwrap_or(-1))
}

