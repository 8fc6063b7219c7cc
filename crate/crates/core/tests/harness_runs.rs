use std::fs;
use std::path::Path;

use bandit_forest::diagnostics::diagnose_run;
use bandit_forest::harness::{run_experiment, run_in_memory, ExperimentConfig};

fn small(scenario: &str, agents: &[&str], horizon: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        scenario: scenario.into(),
        agents: agents.iter().map(|s| s.to_string()).collect(),
        horizon,
        replications: 2,
        eval_rounds: vec![50, 100],
        probes: 8,
        wall_time: false,
        ..ExperimentConfig::default()
    };
    c.bart.n_trees = 10;
    c.bart.nskip = 15;
    c.bart.ndpost = 15;
    c.bart.n_chains = 2;
    c
}

fn read(dir: &Path, file: &str) -> Vec<u8> {
    fs::read(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let cfg = ExperimentConfig {
            out_dir: dir.to_path_buf(),
            ..small("friedman", &["bfts", "fg_bfts", "lints", "linucb", "uniform"], 100)
        };
        run_experiment(&cfg).unwrap();
    }
    for file in [
        "rounds.csv",
        "summary.csv",
        "streams.csv",
        "snapshots.jsonl",
        "coverage_length.csv",
        "ece.csv",
        "rhat.csv",
        "acceptance.csv",
        "policy_tv.csv",
        "feature_inclusion.csv",
    ] {
        assert_eq!(read(a.path(), file), read(b.path(), file), "{file} differs");
    }
    let config = |dir: &Path| -> String {
        String::from_utf8(read(dir, "config.toml"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("out_dir"))
            .collect()
    };
    assert_eq!(config(a.path()), config(b.path()));
    assert!(String::from_utf8(read(a.path(), "coverage_length.csv"))
        .unwrap()
        .starts_with("# schema: bandit-forest/coverage_length/v1\n"));
}

#[test]
fn every_agent_sees_the_same_linear_stream() {
    let art = run_in_memory(&small("linear", &["bfts", "lints", "linucb", "uniform"], 500)).unwrap();
    for rep in 0..2 {
        let hashes: Vec<&str> = art
            .streams
            .iter()
            .filter(|s| s.replication == rep)
            .map(|s| s.context_hash.as_str())
            .collect();
        assert_eq!(hashes.len(), 4);
        assert!(hashes.iter().all(|h| *h == hashes[0]));
    }
    let h0 = &art.streams.iter().find(|s| s.replication == 0).unwrap().context_hash;
    let h1 = &art.streams.iter().find(|s| s.replication == 1).unwrap().context_hash;
    assert_ne!(h0, h1);
}

#[test]
fn diagnose_rebuilds_written_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        out_dir: dir.path().to_path_buf(),
        ..small("friedman_sparse", &["bfts"], 100)
    };
    let art = run_experiment(&cfg).unwrap();
    let rebuilt = diagnose_run(dir.path()).unwrap();
    let written = art.diagnostics.unwrap();
    assert_eq!(rebuilt.coverage.len(), written.coverage.len());
    assert_eq!(rebuilt.policy_tv, written.policy_tv);
    assert_eq!(rebuilt.acceptance, written.acceptance);
    assert_eq!(rebuilt.feature_inclusion.len(), written.feature_inclusion.len());
}

#[test]
fn unknown_scenario_is_rejected() {
    let cfg = small("friedmann", &["uniform"], 10);
    assert!(matches!(run_in_memory(&cfg), Err(bandit_forest::Error::Config(_))));
}
