//! Metropolis-within-Gibbs sampler for the sum-of-trees posterior.

pub mod chain;
pub mod likelihood;
pub mod moves;
pub mod pool;
pub mod rescale;

pub use chain::{Chain, ChainSettings, ChainState, MoveCounters};
pub use likelihood::{
    calibrate_lambda_sigma, gibbs_leaf_draw, gibbs_sigma_update, gibbs_split_axis_update, leaf_marginal_loglik,
    leaf_posterior,
};
pub use moves::{evaluate_move, mh_accept, propose, sample_move, Move, MoveKind, Proposal};
pub use pool::{posterior_predict, run_chains, run_refresh, Draw, DrawPool, RefreshStats, SamplerConfig};
pub use rescale::{rescale_response, Rescale};
