//! Multi-chain refresh producing a pool of posterior draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{Chain, ChainSettings, ChainState, MoveCounters};
use super::likelihood::{calibrate_lambda_sigma, sigma_hat};
use super::rescale::Rescale;
use crate::error::{Error, Result};
use crate::forest::prior::{PriorConfig, SplitAxisProbs};
use crate::forest::{Forest, SplitGrid};
use crate::rng::{derive_path, stream};
use crate::scalar::{self, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig<F> {
    /// Sweeps discarded per chain.
    pub n_burn: usize,
    /// Sweeps retained per chain.
    pub n_post: usize,
    pub n_chains: usize,
    pub prior: PriorConfig<F>,
    /// Hold σ² at this original-scale value instead of sampling it.
    pub fixed_sigma2: Option<F>,
    pub min_leaf_obs: u32,
}

impl<F: Real> Default for SamplerConfig<F> {
    fn default() -> Self {
        SamplerConfig {
            n_burn: 500,
            n_post: 500,
            n_chains: 4,
            prior: PriorConfig::default(),
            fixed_sigma2: None,
            min_leaf_obs: 1,
        }
    }
}

impl<F: Real> SamplerConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.n_post == 0 || self.n_chains == 0 {
            return Err(Error::Config("n_post and n_chains must be at least 1".into()));
        }
        if let Some(s2) = self.fixed_sigma2 {
            if !(s2 > F::zero()) {
                return Err(Error::Config("fixed sigma2 must be positive".into()));
            }
        }
        self.prior.validate()
    }

    pub fn pool_size(&self) -> usize {
        self.n_chains * self.n_post
    }
}

/// One retained state. Forest values and σ² live on the scaled axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Draw<F> {
    pub forest: Forest<F>,
    pub sigma2: F,
    pub s: SplitAxisProbs<F>,
}

/// Per-refresh sampler diagnostics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefreshStats<F> {
    /// Move counters per chain, over all sweeps.
    pub counters: Vec<MoveCounters>,
    /// Retained σ² per chain (original scale).
    pub sigma2_traces: Vec<Vec<F>>,
    pub lambda: F,
    pub degenerate: bool,
}

impl<F> RefreshStats<F> {
    pub fn total_counters(&self) -> MoveCounters {
        let mut total = MoveCounters::default();
        for c in &self.counters {
            total.add(c);
        }
        total
    }
}

/// Pooled post-burn-in draws of all chains, chain-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawPool<F> {
    draws: Vec<Draw<F>>,
    pub rescale: Rescale<F>,
    pub refresh_round: u64,
    pub n_chains: usize,
    pub n_post: usize,
    pub stats: RefreshStats<F>,
}

impl<F: Real> DrawPool<F> {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draws(&self) -> &[Draw<F>] {
        &self.draws
    }

    pub fn draw(&self, k: usize) -> &Draw<F> {
        &self.draws[k]
    }

    /// Chain that produced draw `k`.
    pub fn chain_of(&self, k: usize) -> usize {
        k / self.n_post
    }

    /// Original-scale prediction of draw `k`.
    pub fn predict_draw(&self, k: usize, x: &[F]) -> F {
        self.rescale.inverse(self.draws[k].forest.predict(x))
    }

    /// Original-scale noise variance of draw `k`.
    pub fn sigma2_draw(&self, k: usize) -> F {
        self.rescale.variance_to_original(self.draws[k].sigma2)
    }
}

/// One original-scale prediction per pooled draw.
pub fn posterior_predict<F: Real>(pool: &DrawPool<F>, x: &[F]) -> Vec<F> {
    (0..pool.len()).map(|k| pool.predict_draw(k, x)).collect()
}

fn columns<F: Real>(rows: &[Vec<F>]) -> Vec<Vec<F>> {
    let p = rows[0].len();
    (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// Runs `n_chains` independent chains on already-scaled data with a given
/// grid and noise-prior scale. Chain `c` uses the stream derived from
/// `(seed, round, c)`. Returns the retained states chain-major.
pub fn run_chains<F: Real>(
    cols: &[Vec<F>],
    y_scaled: &[F],
    grid: &SplitGrid<F>,
    config: &SamplerConfig<F>,
    settings: ChainSettings<F>,
    seed: u64,
    round: u64,
) -> (Vec<ChainState<F>>, Vec<MoveCounters>, Vec<Vec<F>>) {
    let per_chain: Vec<(Vec<ChainState<F>>, MoveCounters, Vec<F>)> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(derive_path(seed, &[round, c as u64]));
            let mut chain = Chain::from_prior(cols, y_scaled, grid, &config.prior, settings, &mut rng);
            for _ in 0..config.n_burn {
                chain.sweep(&mut rng);
            }
            let mut kept = Vec::with_capacity(config.n_post);
            let mut trace = Vec::with_capacity(config.n_post);
            for _ in 0..config.n_post {
                chain.sweep(&mut rng);
                let st = chain.state();
                kept.push(ChainState {
                    forest: st.forest.compact(),
                    sigma2: st.sigma2,
                    s: st.s.clone(),
                });
                trace.push(st.sigma2);
            }
            (kept, *chain.counters(), trace)
        })
        .collect();
    let mut states = Vec::with_capacity(config.pool_size());
    let mut counters = Vec::new();
    let mut traces = Vec::new();
    for (kept, c, t) in per_chain {
        states.extend(kept);
        counters.push(c);
        traces.push(t);
    }
    (states, counters, traces)
}

/// Cold-start refresh on one arm's data (`rows` are contexts).
pub fn run_refresh<F: Real>(
    rows: &[Vec<F>],
    y: &[F],
    config: &SamplerConfig<F>,
    seed: u64,
    round: u64,
) -> Result<DrawPool<F>> {
    if rows.is_empty() || y.is_empty() {
        return Err(Error::NoData);
    }
    assert_eq!(rows.len(), y.len());
    let rescale = Rescale::fit(y);
    let y_scaled: Vec<F> = y.iter().map(|&v| rescale.forward(v)).collect();
    let mut sd = sigma_hat(&y_scaled);
    if !(sd > F::zero()) {
        sd = F::lit(0.1);
    }
    let nu = config.prior.nu;
    let lambda = F::lit(calibrate_lambda_sigma(sd.as_f64(), nu.as_f64(), config.prior.q.as_f64()));
    let fixed = config.fixed_sigma2.map(|s2| rescale.variance_to_scaled(s2));

    if rescale.is_degenerate_for(y) {
        let mut draws = Vec::with_capacity(config.pool_size());
        let mut traces = Vec::new();
        let p = rows[0].len();
        for c in 0..config.n_chains {
            let mut rng = stream(derive_path(seed, &[round, c as u64]));
            let mut trace = Vec::new();
            for _ in 0..config.n_post {
                let two = F::lit(2.0);
                let s2 = fixed.unwrap_or_else(|| scalar::inv_gamma(&mut rng, nu / two, nu * lambda / two));
                trace.push(rescale.variance_to_original(s2));
                draws.push(Draw {
                    forest: Forest::zeros(config.prior.m),
                    sigma2: s2,
                    s: SplitAxisProbs::uniform(p),
                });
            }
            traces.push(trace);
        }
        return Ok(DrawPool {
            draws,
            rescale,
            refresh_round: round,
            n_chains: config.n_chains,
            n_post: config.n_post,
            stats: RefreshStats {
                counters: vec![MoveCounters::default(); config.n_chains],
                sigma2_traces: traces,
                lambda,
                degenerate: true,
            },
        });
    }

    let cols = columns(rows);
    let grid = SplitGrid::from_columns(&cols, config.prior.n_max)?;
    let settings = ChainSettings {
        lambda,
        fixed_sigma2: fixed,
        min_leaf_obs: config.min_leaf_obs,
    };
    let (states, counters, traces) = run_chains(&cols, &y_scaled, &grid, config, settings, seed, round);
    let draws = states
        .into_iter()
        .map(|s| Draw {
            forest: s.forest,
            sigma2: s.sigma2,
            s: s.s,
        })
        .collect();
    Ok(DrawPool {
        draws,
        rescale,
        refresh_round: round,
        n_chains: config.n_chains,
        n_post: config.n_post,
        stats: RefreshStats {
            counters,
            sigma2_traces: traces
                .into_iter()
                .map(|t| t.into_iter().map(|v| rescale.variance_to_original(v)).collect())
                .collect(),
            lambda,
            degenerate: false,
        },
    })
}
