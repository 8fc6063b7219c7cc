use rand::Rng;

use super::Agent;
use crate::error::Result;
use crate::rng::{stream, StreamRng};
use crate::scalar;

/// Picks arms uniformly at random, or from the logged behavior propensities
/// when `replay_behavior` is set.
pub struct UniformAgent {
    k: usize,
    t: u64,
    rng: StreamRng,
    replay_behavior: bool,
    behavior: Option<Vec<f64>>,
    name: String,
}

impl UniformAgent {
    pub fn new(k: usize, seed: u64) -> Self {
        UniformAgent {
            k,
            t: 1,
            rng: stream(seed),
            replay_behavior: false,
            behavior: None,
            name: "uniform".into(),
        }
    }

    /// Plays the behavior propensities supplied through `observe_behavior`.
    pub fn logging(k: usize, seed: u64) -> Self {
        UniformAgent {
            replay_behavior: true,
            name: "logging".into(),
            ..UniformAgent::new(k, seed)
        }
    }
}

impl Agent for UniformAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn n_arms(&self) -> usize {
        self.k
    }

    fn round(&self) -> u64 {
        self.t
    }

    fn select(&mut self, _x: &[f64]) -> Result<usize> {
        match (&self.behavior, self.replay_behavior) {
            (Some(p), true) => Ok(scalar::categorical(&mut self.rng, p)),
            _ => Ok(self.rng.random_range(0..self.k)),
        }
    }

    fn update(&mut self, _x: &[f64], _action: usize, _reward: f64) -> Result<()> {
        self.t += 1;
        Ok(())
    }

    fn policy_distribution(&mut self, _x: &[f64]) -> Vec<f64> {
        match (&self.behavior, self.replay_behavior) {
            (Some(p), true) => p.clone(),
            _ => vec![1.0 / self.k as f64; self.k],
        }
    }

    fn observe_behavior(&mut self, propensities: &[f64]) {
        if self.replay_behavior {
            self.behavior = Some(propensities.to_vec());
        }
    }
}
