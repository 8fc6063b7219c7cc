use bandit_forest::agents::UniformAgent;
use bandit_forest::diagnostics::{
    coverage_and_length, credible_interval, ece, ece_from_draws, inclusion_from_counts, policy_delta_tv, ECE_LEVELS,
};
use bandit_forest::env::{LoggedPanel, PanelRow};
use bandit_forest::forest::serialize::{forest_from_str, forest_to_string};
use bandit_forest::forest::{sample_tree_from_prior, Forest, PriorConfig, SplitAxisProbs, SplitGrid};
use bandit_forest::ope::{ess, replay_run, snips};
use bandit_forest::rng::stream;
use proptest::prelude::*;

fn distribution(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, k).prop_filter_map("all zero", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-9).then(|| v.iter().map(|x| x / s).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forest_text_round_trip(seed in any::<u64>(), m in 1usize..6, p in 1usize..4) {
        let grid = SplitGrid::from_thresholds((0..p).map(|j| (1..8).map(|i| i as f64 / 8.0 + j as f64).collect()).collect());
        let prior = PriorConfig::<f64> { m, ..PriorConfig::default() };
        let s = SplitAxisProbs::uniform(p);
        let mut rng = stream(seed);
        let forest = Forest::new((0..m).map(|_| sample_tree_from_prior(&prior, &grid, &s, &mut rng)).collect());
        let text = forest_to_string(&forest);
        let back: Forest<f64> = forest_from_str(&text).unwrap();
        prop_assert_eq!(forest_to_string(&back), text);
        let x: Vec<f64> = (0..p).map(|j| j as f64 + 0.4).collect();
        prop_assert_eq!(back.predict(&x), forest.predict(&x));
    }

    #[test]
    fn policy_tv_symmetric_and_bounded(a in distribution(4), b in distribution(4)) {
        let ab = policy_delta_tv(&a, &b).unwrap();
        let ba = policy_delta_tv(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-15);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!(policy_delta_tv(&a, &a).unwrap().abs() < 1e-15);
    }

    #[test]
    fn snips_ignores_weight_scale(
        pairs in prop::collection::vec((0.01f64..10.0, 0.0f64..1.0), 1..50),
        c in 0.001f64..1000.0,
    ) {
        let (w, r): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let (a, b) = (snips(&w, &r).unwrap(), snips(&scaled, &r).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((ess(&w) - ess(&scaled)).abs() < 1e-9 * ess(&w));
        prop_assert!(ess(&w) <= w.len() as f64 + 1e-9);
    }

    #[test]
    fn intervals_nest_and_coverage_grows(
        draws in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 1..40), 1..10),
        truth in -5.0f64..5.0,
    ) {
        let truths = vec![truth; draws.len()];
        let mut prev_cov = 0.0;
        let mut prev: Vec<(f64, f64)> = vec![(f64::INFINITY, f64::NEG_INFINITY); draws.len()];
        for &level in &ECE_LEVELS {
            let ivs: Vec<(f64, f64)> = draws.iter().map(|d| credible_interval(d, level)).collect();
            for (iv, old) in ivs.iter().zip(&prev) {
                prop_assert!(iv.0 <= iv.1);
                prop_assert!(iv.0 <= old.0 && iv.1 >= old.1);
            }
            let (cov, len) = coverage_and_length(&ivs, &truths);
            prop_assert!(cov >= prev_cov && len >= 0.0);
            prev_cov = cov;
            prev = ivs;
        }
        let e = ece_from_draws(&draws, &truths, &ECE_LEVELS);
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn ece_stays_in_unit_interval(covs in prop::collection::vec(0.0f64..=1.0, 9)) {
        let e = ece(&ECE_LEVELS, &covs);
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn inclusion_is_a_distribution(counts in prop::collection::vec(0u64..1000, 1..30)) {
        let inc = inclusion_from_counts(&counts);
        prop_assert!((inc.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(inc.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn replay_weight_bounded_by_inverse_propensity(behavior in distribution(3), seed in any::<u64>()) {
        prop_assume!(behavior.iter().all(|p| *p > 0.02));
        let mut rng = stream(seed);
        let rows: Vec<PanelRow> = (0..60)
            .map(|i| {
                use rand::Rng;
                PanelRow {
                    context: vec![rng.random::<f64>()],
                    action: bandit_forest::scalar::categorical(&mut rng, &behavior),
                    reward: rng.random::<f64>(),
                    propensities: behavior.clone(),
                    cluster_id: format!("c{}", i % 5),
                    step: i as i64 / 5,
                }
            })
            .collect();
        let panel = LoggedPanel::new(1, 3, rows).unwrap();
        let mut agent = UniformAgent::new(3, seed ^ 1);
        let res = replay_run(&mut agent, &panel).unwrap();
        for (rec, row) in res.records.iter().zip(&panel.rows) {
            prop_assert!(rec.weight >= 0.0);
            prop_assert!(rec.weight <= 1.0 / row.propensities[row.action] + 1e-12);
        }
    }
}
