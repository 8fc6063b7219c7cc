//! Thompson sampling for contextual bandits with Bayesian additive regression
//! tree (BART) reward models.

pub mod agents;
pub mod diagnostics;
pub mod env;
pub mod error;
pub mod forest;
pub mod harness;
pub mod mcmc;
pub mod ope;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Tree64 = forest::Tree<f64>;
pub type Forest64 = forest::Forest<f64>;
pub type Forest32 = forest::Forest<f32>;
pub type PriorConfig64 = forest::PriorConfig<f64>;
pub type DrawPool64 = mcmc::DrawPool<f64>;
pub type SamplerConfig64 = mcmc::SamplerConfig<f64>;
