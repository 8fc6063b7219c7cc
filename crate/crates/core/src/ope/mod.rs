//! Off-policy evaluation on logged panels: replay, SNIPS and doubly-robust
//! estimators, effective sample size and cluster bootstrap.

pub mod bootstrap;
pub mod dr;
pub mod report;

pub use bootstrap::{cluster_bootstrap, resample_clusters};
pub use dr::{cross_fit_ridge, dr_estimate, dr_with_outcomes, OutcomeModelSpec};
pub use report::{evaluate_policy, write_ope_csv, Estimator, OpeConfig, OpeRow};

use serde::Serialize;

use crate::agents::Agent;
use crate::env::LoggedPanel;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplayRecord {
    /// Target-policy distribution at the row, taken before the row is seen.
    pub policy: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub weight: f64,
    pub matched: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReplayResult {
    pub records: Vec<ReplayRecord>,
    pub n_updates: usize,
}

impl ReplayResult {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn match_rate(&self) -> f64 {
        self.match_rate_prefix(self.len())
    }

    pub fn match_rate_prefix(&self, n: usize) -> f64 {
        let n = n.min(self.len());
        if n == 0 {
            return 0.0;
        }
        self.records[..n].iter().filter(|r| r.matched).count() as f64 / n as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.weight).collect()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.reward).collect()
    }

    pub fn policies(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.policy.clone()).collect()
    }
}

/// Replays a panel through `agent`. At each row the agent's current policy
/// distribution gives the importance weight of the logged action; the agent
/// then samples an action and learns from the row only if it matches.
pub fn replay_run(agent: &mut dyn Agent, panel: &LoggedPanel) -> Result<ReplayResult> {
    let mut out = ReplayResult::default();
    for (i, row) in panel.rows.iter().enumerate() {
        let pb = row.propensities[row.action];
        if !(pb > 0.0) {
            return Err(Error::PositivityViolation { row: i, action: row.action });
        }
        agent.observe_behavior(&row.propensities);
        let policy = agent.policy_distribution(&row.context);
        let weight = policy[row.action] / pb;
        let chosen = agent.select(&row.context)?;
        let matched = chosen == row.action;
        if matched {
            agent.update(&row.context, row.action, row.reward)?;
            out.n_updates += 1;
        }
        out.records.push(ReplayRecord {
            policy,
            action: row.action,
            reward: row.reward,
            weight,
            matched,
        });
    }
    Ok(out)
}

/// Share of draws whose greedy arm is `a`, from predictions indexed
/// `[arm][draw]`. Ties go to the lowest arm.
pub fn vote_distribution(predictions: &[Vec<f64>]) -> Vec<f64> {
    let k = predictions.len();
    let n = predictions.first().map_or(0, Vec::len);
    let mut counts = vec![0usize; k];
    let mut column = vec![0.0; k];
    for j in 0..n {
        for (c, arm) in column.iter_mut().zip(predictions) {
            *c = arm[j];
        }
        counts[crate::scalar::argmax(&column)] += 1;
    }
    counts.into_iter().map(|c| c as f64 / n as f64).collect()
}

/// Self-normalized importance sampling: `Σ w r / Σ w`.
pub fn snips(weights: &[f64], rewards: &[f64]) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    Ok(weights.iter().zip(rewards).map(|(w, r)| w * r).sum::<f64>() / total)
}

/// Effective sample size `(Σ w)² / Σ w²` (0 when all weights vanish).
pub fn ess(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}
