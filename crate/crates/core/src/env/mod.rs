//! Reward sources: synthetic data-generating processes, classification
//! datasets turned into bandits, and logged interaction panels.

pub mod classification;
pub mod panel;
pub mod synthetic;

pub use classification::{load_tabular_csv, ClassificationBanditEnv, TabularData, TabularOptions};
pub use panel::{generate_synthetic_panel, LoggedPanel, PanelRow, SyntheticPanel, SyntheticPanelConfig, BUNDLED_PANEL_SEED};
pub use synthetic::{friedman1, friedman2, friedman3, ArmVariant, FriedmanFn, SyntheticEnv, SyntheticKind, SyntheticSpec};

use crate::error::Result;

/// Fully materialized interaction sequence shared by every agent of a
/// replication. `rewards[t][a]` is what arm `a` would pay at round `t + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionStream {
    pub contexts: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
    pub rewards: Vec<Vec<f64>>,
}

impl InteractionStream {
    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// Per-round regret of playing `a` at 0-based index `i`.
    pub fn regret(&self, i: usize, a: usize) -> f64 {
        let best = self.means[i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best - self.means[i][a]
    }

    /// Order-sensitive hash of the context sequence.
    pub fn context_hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(self.len() * 8 * self.contexts.first().map_or(0, |c| c.len()));
        for x in &self.contexts {
            for v in x {
                bytes.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        crate::rng::fnv1a(&bytes)
    }
}

/// A source of bandit interactions.
pub trait BanditEnvironment: Send + Sync {
    fn n_arms(&self) -> usize;

    fn dim(&self) -> usize;

    /// Draws a stream of `horizon` rounds from the given seed.
    fn materialize(&self, horizon: usize, seed: u64) -> Result<InteractionStream>;

    /// Exact mean-reward vector at `x`, when known.
    fn mean_rewards(&self, x: &[f64]) -> Option<Vec<f64>>;
}
