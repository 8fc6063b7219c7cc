use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{interval_sorted, r_hat, split_counts};
use crate::agents::BftsAgent;
use crate::mcmc::MoveCounters;
use crate::ope::vote_distribution;
use crate::rng::{derive, fnv1a, stream};

/// Nominal levels used for the calibration error.
pub const ECE_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Level of the reported credible intervals.
pub const INTERVAL_LEVEL: f64 = 0.95;

pub const DEFAULT_PROBES: usize = 40;

/// Fixed contexts at which posterior uncertainty is tracked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub contexts: Vec<Vec<f64>>,
}

impl ProbeSet {
    /// Uniform contexts drawn from a stream keyed by the global seed and the
    /// scenario name, so every replication sees the same probes.
    pub fn new(global_seed: u64, scenario: &str, p: usize, j: usize) -> Self {
        let mut rng = stream(derive(global_seed, fnv1a(scenario.as_bytes())));
        ProbeSet {
            contexts: (0..j).map(|_| (0..p).map(|_| rng.random::<f64>()).collect()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    /// Taken right after a posterior refresh.
    Refresh,
    /// Taken at an evaluation round; describes the latest pool.
    Eval,
}

/// Posterior summary of a forest agent at one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub replication: usize,
    pub agent: String,
    pub kind: SnapshotKind,
    pub round: u64,
    pub refresh_round: u64,
    /// `ECE_LEVELS` followed by `INTERVAL_LEVEL`.
    pub levels: Vec<f64>,
    /// Central intervals `[probe][arm][level]`.
    pub intervals: Vec<Vec<Vec<(f64, f64)>>>,
    /// True means `[probe][arm]`, when the environment knows them.
    pub truth: Option<Vec<Vec<f64>>>,
    /// Vote distributions `[probe][arm]`.
    pub votes: Vec<Vec<f64>>,
    /// R-hat of σ² for each model and of every probe/arm prediction. Empty
    /// with fewer than two chains or four draws per chain.
    pub rhat: Vec<f64>,
    /// Move counters of the refresh that built the pool.
    pub counters: MoveCounters,
    /// Split rules per context feature over every draw, tree and model.
    pub split_counts: Vec<u64>,
}

impl Snapshot {
    /// Returns `None` before the agent's first refresh.
    pub fn capture(
        agent: &mut BftsAgent,
        probes: &ProbeSet,
        truth: Option<Vec<Vec<f64>>>,
        replication: usize,
        kind: SnapshotKind,
        round: u64,
    ) -> Option<Snapshot> {
        let pools = agent.pools();
        if pools.is_empty() {
            return None;
        }
        let p = probes.contexts.first().map_or(0, Vec::len);
        let k = crate::agents::Agent::n_arms(agent);
        let (n_chains, n_post) = (pools[0].n_chains, pools[0].n_post);
        let rhat_ok = n_chains >= 2 && n_post >= 4;
        let mut levels = ECE_LEVELS.to_vec();
        levels.push(INTERVAL_LEVEL);

        let mut rhat = Vec::new();
        if rhat_ok {
            for pool in pools {
                rhat.push(r_hat(&pool.stats.sigma2_traces));
            }
        }
        let tilted = agent.config().fg.is_some_and(|fg| fg.lambda > 0.0);
        let mut intervals = Vec::with_capacity(probes.len());
        let mut votes = Vec::with_capacity(probes.len());
        for x in &probes.contexts {
            let preds = agent.draw_predictions(x);
            if !tilted {
                votes.push(vote_distribution(&preds));
            }
            let mut per_arm = Vec::with_capacity(k);
            for arm in preds {
                if rhat_ok {
                    let chains: Vec<Vec<f64>> = arm.chunks(n_post).map(<[f64]>::to_vec).collect();
                    rhat.push(r_hat(&chains));
                }
                let mut sorted = arm;
                sorted.sort_by(f64::total_cmp);
                per_arm.push(levels.iter().map(|&g| interval_sorted(&sorted, g)).collect());
            }
            intervals.push(per_arm);
        }

        let enc = agent.config().encoding;
        let mut counts = vec![0u64; p];
        for pool in agent.pools() {
            let raw = split_counts(pool.draws().iter().map(|d| &d.forest), enc.dim(k, p));
            for (j, c) in raw.into_iter().enumerate() {
                if let Some(f) = enc.feature_of(j, k, p) {
                    counts[f] += c;
                }
            }
        }
        let refresh = agent.refreshes().last().cloned();
        if tilted {
            votes = probes.contexts.iter().map(|x| agent.votes(x)).collect();
        }
        Some(Snapshot {
            replication,
            agent: crate::agents::Agent::name(agent).to_string(),
            kind,
            round,
            refresh_round: refresh.as_ref().map_or(0, |r| r.t),
            levels,
            intervals,
            truth,
            votes,
            rhat,
            counters: refresh.map(|r| r.counters).unwrap_or_default(),
            split_counts: counts,
        })
    }

    /// Copy relabelled as an evaluation-round snapshot.
    pub fn at_eval_round(&self, round: u64) -> Snapshot {
        Snapshot {
            kind: SnapshotKind::Eval,
            round,
            ..self.clone()
        }
    }

    pub fn level_index(&self, level: f64) -> Option<usize> {
        self.levels.iter().position(|&l| (l - level).abs() < 1e-12)
    }
}
