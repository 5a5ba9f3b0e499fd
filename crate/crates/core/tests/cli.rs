//! End-to-end runs of the `spatfeat` binary.

use std::path::Path;
use std::process::{Command, Output};

use spatfeat::agents::LinearPolicy;
use spatfeat::bench::read_csv;
use spatfeat::features::FeatureSet;

/// Runs the binary with a whitespace-separated argument line.
fn spatfeat(line: &str) -> Output {
    let args: Vec<&str> = line.split_whitespace().collect();
    let out = Command::new(env!("CARGO_BIN_EXE_spatfeat"))
        .args(&args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "spatfeat {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn gen_features_roundtrips_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("hex.txt");
    spatfeat(&format!(
        "gen-features --game hex --max-len 1 --max-straight 2 --out {}",
        path(&file)
    ));
    let set = FeatureSet::load(&file).unwrap();
    assert!(!set.is_empty());
    let printed = stdout(&spatfeat("gen-features --game hex --max-len 1 --max-straight 2"));
    assert_eq!(printed, set.to_text());
}

#[test]
fn check_reports_agreement() {
    let out = stdout(&spatfeat(
        "check --game tictactoe --features Atomic-1-2 --playouts 5 --verify",
    ));
    assert!(out.contains("0 mismatches"), "{out}");
    assert!(!out.contains("FAIL"), "{out}");
}

#[test]
fn fixed_bench_writes_csv_and_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rates.csv");
    spatfeat(&format!(
        "bench --game tictactoe --features Atomic-1-1,Atomic-2-2 --playouts 20 --out {}",
        path(&csv)
    ));
    let rows = read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.playouts == 20 && r.prop_evals > 0));
    let evals = |backend: &str| {
        rows.iter()
            .find(|r| r.backend == backend && r.feature_set == "Atomic-2-2")
            .unwrap()
            .prop_evals
    };
    assert!(evals("spatternet") < evals("naive"));
    let ranks = stdout(&spatfeat(&format!("rank --input {}", path(&csv))));
    assert!(ranks.contains("spatternet"), "{ranks}");
}

#[test]
fn train_then_match() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("ttt.spatw");
    let policy = path(&policy);
    spatfeat(&format!(
        "train --game tictactoe --episodes 2 --iterations 20 --seed 4 --out {policy}"
    ));
    let (weights, set) = LinearPolicy::load(Path::new(policy)).unwrap();
    assert_eq!(weights.num_features(), set.len());
    let out = stdout(&spatfeat(&format!(
        "match --game tictactoe --a greedy:spatternet --b random --policy {policy} --games 10"
    )));
    assert!(out.contains("greedy:spatternet vs random"), "{out}");
}

#[test]
fn unknown_game_fails_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_spatfeat"))
        .args(["gen-features", "--game", "chess"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("chess"));
}
