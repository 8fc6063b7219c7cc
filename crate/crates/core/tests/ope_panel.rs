use std::path::PathBuf;

use bandit_forest::env::{generate_synthetic_panel, LoggedPanel, SyntheticPanelConfig, BUNDLED_PANEL_SEED};
use bandit_forest::harness::{run_ope, ExperimentConfig, OpeRequest};
use bandit_forest::ope::{cross_fit_ridge, dr_with_outcomes, Estimator, OpeConfig};

fn bundled_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_panel.csv")
}

#[test]
fn bundled_panel_matches_its_generator() {
    let generated = generate_synthetic_panel(&SyntheticPanelConfig::default(), BUNDLED_PANEL_SEED).unwrap();
    let mut bytes = Vec::new();
    generated.panel.write_csv(&mut bytes).unwrap();
    assert_eq!(std::fs::read(bundled_path()).unwrap(), bytes);
    let loaded = LoggedPanel::from_csv(bundled_path()).unwrap();
    assert_eq!(loaded, generated.panel);
    assert_eq!(loaded.clusters().len(), 200);
}

#[test]
fn logging_policy_replay_on_bundled_panel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ope.csv");
    let req = OpeRequest {
        panel: bundled_path(),
        policy: "logging".into(),
        ope: OpeConfig {
            estimators: vec![Estimator::Snips, Estimator::Dr],
            bootstrap: 4,
            ..OpeConfig::default()
        },
        out: Some(out.clone()),
    };
    let rows = run_ope(&req, &ExperimentConfig::default()).unwrap();
    let panel = LoggedPanel::from_csv(bundled_path()).unwrap();
    let n = panel.len();
    let mean_reward = panel.rows.iter().map(|r| r.reward).sum::<f64>() / n as f64;
    let full: Vec<_> = rows.iter().filter(|r| r.replicate.is_none() && r.checkpoint == n).collect();
    assert_eq!(full.len(), 2);
    let snips = full.iter().find(|r| r.estimator == "snips").unwrap();
    assert!((snips.value - mean_reward).abs() < 1e-12);
    // The replayed logging policy draws its own action, so it matches with
    // probability 0.4² + 0.3² + 0.3² = 0.34.
    assert!((snips.match_rate - 0.34).abs() < 0.02, "{}", snips.match_rate);
    assert!((snips.ess - n as f64).abs() < 1e-6);
    let policies: Vec<Vec<f64>> = panel.rows.iter().map(|r| r.propensities.clone()).collect();
    let dr = dr_with_outcomes(&panel, &policies, &cross_fit_ridge(&panel, 1.0)).unwrap();
    let got = full.iter().find(|r| r.estimator == "dr").unwrap().value;
    assert!((got - dr).abs() < 1e-12);
    let mut reps: Vec<usize> = rows.iter().filter_map(|r| r.replicate).collect();
    reps.dedup();
    assert_eq!(reps, vec![0, 1, 2, 3]);
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("# schema: bandit-forest/ope/v1\n"));
}

#[test]
fn unknown_policy_is_a_config_error() {
    let req = OpeRequest {
        panel: bundled_path(),
        policy: "oracle".into(),
        ope: OpeConfig::default(),
        out: None,
    };
    assert!(matches!(run_ope(&req, &ExperimentConfig::default()), Err(bandit_forest::Error::Config(_))));
}
