//! Bandit agents: forest Thompson sampling (with the Feel-Good variant),
//! linear Thompson sampling, LinUCB, and simple reference policies.

pub mod encoding;
pub mod forest_ts;
pub mod linear;
pub mod random;
pub mod schedule;

pub use encoding::Encoding;
pub use forest_ts::{BftsAgent, BftsConfig, FgConfig, RefreshRecord};
pub use linear::{LinearAgent, LinearConfig, LinearKind};
pub use random::UniformAgent;
pub use schedule::{refresh_index, RefreshSchedule};

use crate::error::Result;

/// A contextual bandit learner. Rounds are counted by updates: the agent is at
/// round `t` after `t - 1` calls to [`Agent::update`]. A selection that is
/// not followed by an update (a replay mismatch) only advances the agent's RNG.
pub trait Agent: Send {
    fn name(&self) -> &str;

    fn n_arms(&self) -> usize;

    /// Round about to be played (1-based).
    fn round(&self) -> u64;

    fn select(&mut self, x: &[f64]) -> Result<usize>;

    fn update(&mut self, x: &[f64], action: usize, reward: f64) -> Result<()>;

    /// Action distribution the agent would play at `x` right now.
    fn policy_distribution(&mut self, x: &[f64]) -> Vec<f64>;

    /// Behavior propensities of the current logged row, for policies that
    /// replay them. Ignored by learning agents.
    fn observe_behavior(&mut self, _propensities: &[f64]) {}

    /// Forest-model view, for agents that keep posterior draw pools.
    fn as_forest(&self) -> Option<&BftsAgent> {
        None
    }

    fn as_forest_mut(&mut self) -> Option<&mut BftsAgent> {
        None
    }
}

/// Index of the largest value; ties go to the smallest index.
pub fn argmax_min_index(values: &[f64]) -> usize {
    crate::scalar::argmax(values)
}
