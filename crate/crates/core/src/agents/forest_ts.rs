//! Thompson sampling over per-arm BART posteriors with batched refreshes,
//! and its Feel-Good variant.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::encoding::Encoding;
use super::schedule::RefreshSchedule;
use super::{argmax_min_index, Agent};
use crate::error::{Error, Result};
use crate::forest::{PriorConfig, SplitAxisPrior};
use crate::mcmc::{run_refresh, DrawPool, MoveCounters, SamplerConfig};
use crate::rng::{derive, stream, StreamRng};
use crate::scalar;

/// Feel-Good tilt: draw `j` is chosen with probability `∝ exp(λ S_j)` where
/// `S_j` accumulates `min(b, max_a f_j(x_s, a))` over past contexts. The
/// sampler holds σ² at `1/(2η)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FgConfig {
    pub eta: f64,
    pub lambda: f64,
    pub b: f64,
}

impl Default for FgConfig {
    fn default() -> Self {
        FgConfig {
            eta: 1.0,
            lambda: 0.0,
            b: 1.0,
        }
    }
}

impl FgConfig {
    pub fn fixed_sigma2(&self) -> f64 {
        1.0 / (2.0 * self.eta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BftsConfig {
    pub sampler: SamplerConfig<f64>,
    pub schedule: RefreshSchedule,
    /// Round-robin pulls per arm before Thompson sampling starts.
    pub tau: u64,
    pub encoding: Encoding,
    pub fg: Option<FgConfig>,
}

impl Default for BftsConfig {
    fn default() -> Self {
        BftsConfig {
            sampler: SamplerConfig {
                prior: PriorConfig {
                    split_axis: SplitAxisPrior::DirichletSparse { zeta: 1.0, xi: 1.0 },
                    ..PriorConfig::default()
                },
                ..SamplerConfig::default()
            },
            schedule: RefreshSchedule::default(),
            tau: 5,
            encoding: Encoding::Separate,
            fg: None,
        }
    }
}

impl BftsConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if self.tau == 0 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        if let Some(fg) = &self.fg {
            if !(fg.eta > 0.0) || !(fg.lambda >= 0.0) || !(fg.b > 0.0) {
                return Err(Error::Config("Feel-Good needs eta > 0, lambda >= 0, b > 0".into()));
            }
        }
        Ok(())
    }

    fn effective_sampler(&self) -> SamplerConfig<f64> {
        let mut s = self.sampler.clone();
        if let Some(fg) = &self.fg {
            s.fixed_sigma2 = Some(fg.fixed_sigma2());
        }
        s
    }
}

/// Sampler summary of one refresh event.
#[derive(Clone, Debug, PartialEq)]
pub struct RefreshRecord {
    pub t: u64,
    /// Move counters summed over models and chains.
    pub counters: MoveCounters,
}

pub struct BftsAgent {
    name: String,
    config: BftsConfig,
    sampler: SamplerConfig<f64>,
    k: usize,
    data_x: Vec<Vec<Vec<f64>>>,
    data_y: Vec<Vec<f64>>,
    history: Vec<Vec<f64>>,
    pools: Vec<DrawPool<f64>>,
    queue: Vec<usize>,
    cursor: usize,
    scores: Vec<f64>,
    rng: StreamRng,
    mcmc_seed: u64,
    t: u64,
    refreshes: Vec<RefreshRecord>,
    z: Vec<f64>,
}

impl BftsAgent {
    pub fn new(name: impl Into<String>, config: BftsConfig, k: usize, seed: u64) -> Self {
        let n_models = config.encoding.n_models(k);
        BftsAgent {
            name: name.into(),
            sampler: config.effective_sampler(),
            config,
            k,
            data_x: vec![Vec::new(); n_models],
            data_y: vec![Vec::new(); n_models],
            history: Vec::new(),
            pools: Vec::new(),
            queue: Vec::new(),
            cursor: 0,
            scores: Vec::new(),
            rng: stream(derive(seed, 0)),
            mcmc_seed: derive(seed, 1),
            t: 1,
            refreshes: Vec::new(),
            z: Vec::new(),
        }
    }

    pub fn config(&self) -> &BftsConfig {
        &self.config
    }

    pub fn pools(&self) -> &[DrawPool<f64>] {
        &self.pools
    }

    pub fn refreshes(&self) -> &[RefreshRecord] {
        &self.refreshes
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Number of draws in each pool (0 before the first refresh).
    pub fn pool_size(&self) -> usize {
        self.pools.first().map_or(0, |p| p.len())
    }

    /// Rows held by each model.
    pub fn data_sizes(&self) -> Vec<usize> {
        self.data_y.iter().map(|y| y.len()).collect()
    }

    fn warmup_rounds(&self) -> u64 {
        self.config.tau * self.k as u64
    }

    /// Original-scale prediction of draw `j` for arm `a`.
    pub fn predict(&self, j: usize, a: usize, x: &[f64]) -> f64 {
        match self.config.encoding {
            Encoding::Separate => self.pools[a].predict_draw(j, x),
            enc => self.pools[0].predict_draw(j, &enc.encode(x, a, self.k)),
        }
    }

    fn predict_all_arms(&mut self, j: usize, x: &[f64]) -> Vec<f64> {
        let enc = self.config.encoding;
        (0..self.k)
            .map(|a| match enc {
                Encoding::Separate => self.pools[a].predict_draw(j, x),
                _ => {
                    enc.encode_into(x, a, self.k, &mut self.z);
                    self.pools[0].predict_draw(j, &self.z)
                }
            })
            .collect()
    }

    /// Predictions `[arm][draw]` at `x`.
    pub fn draw_predictions(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.k)
            .map(|a| (0..self.pool_size()).map(|j| self.predict(j, a, x)).collect())
            .collect()
    }

    /// Greedy action of draw `j` at `x`.
    pub fn draw_action(&mut self, j: usize, x: &[f64]) -> usize {
        argmax_min_index(&self.predict_all_arms(j, x))
    }

    fn next_queued(&mut self) -> usize {
        if self.cursor >= self.queue.len() {
            self.queue = (0..self.pool_size()).collect();
            self.queue.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let j = self.queue[self.cursor];
        self.cursor += 1;
        j
    }

    fn tilt_weights(&self, lambda: f64) -> Vec<f64> {
        let max = self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.scores.iter().map(|&s| (lambda * (s - max)).exp()).collect()
    }

    fn pick_draw(&mut self) -> usize {
        match self.config.fg {
            Some(fg) if fg.lambda > 0.0 => {
                let w = self.tilt_weights(fg.lambda);
                scalar::categorical(&mut self.rng, &w)
            }
            _ => self.next_queued(),
        }
    }

    /// Capped optimistic value `min(b, max_a f_j(x, a))` for every draw.
    fn fg_increments(&mut self, x: &[f64], b: f64) -> Vec<f64> {
        (0..self.pool_size())
            .map(|j| {
                let best = self.predict_all_arms(j, x).into_iter().fold(f64::NEG_INFINITY, f64::max);
                best.min(b)
            })
            .collect()
    }

    fn refresh(&mut self, t: u64) -> Result<()> {
        let mut pools = Vec::with_capacity(self.data_x.len());
        let mut counters = MoveCounters::default();
        for (m, (xs, ys)) in self.data_x.iter().zip(&self.data_y).enumerate() {
            let pool = run_refresh(xs, ys, &self.sampler, derive(self.mcmc_seed, m as u64), t)?;
            counters.add(&pool.stats.total_counters());
            pools.push(pool);
        }
        self.pools = pools;
        self.queue.clear();
        self.cursor = 0;
        self.refreshes.push(RefreshRecord { t, counters });
        if let Some(fg) = self.config.fg {
            let mut scores = vec![0.0; self.pool_size()];
            let history = std::mem::take(&mut self.history);
            for x in &history {
                for (s, inc) in scores.iter_mut().zip(self.fg_increments(x, fg.b)) {
                    *s += inc;
                }
            }
            self.history = history;
            self.scores = scores;
        }
        Ok(())
    }

    /// Vote distribution over arms at `x` (probability each arm is the
    /// greedy action of a pooled draw).
    pub fn votes(&mut self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        if self.pools.is_empty() {
            out[((self.t - 1) % self.k as u64) as usize] = 1.0;
            return out;
        }
        let n = self.pool_size();
        match self.config.fg {
            Some(fg) if fg.lambda > 0.0 => {
                let w = self.tilt_weights(fg.lambda);
                let total: f64 = w.iter().sum();
                for (j, w) in w.into_iter().enumerate() {
                    let a = self.draw_action(j, x);
                    out[a] += w / total;
                }
            }
            _ => {
                let mut counts = vec![0usize; self.k];
                for j in 0..n {
                    counts[self.draw_action(j, x)] += 1;
                }
                for (o, c) in out.iter_mut().zip(counts) {
                    *o = c as f64 / n as f64;
                }
            }
        }
        out
    }
}

impl Agent for BftsAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn n_arms(&self) -> usize {
        self.k
    }

    fn round(&self) -> u64 {
        self.t
    }

    fn select(&mut self, x: &[f64]) -> Result<usize> {
        if self.t <= self.warmup_rounds() {
            return Ok(((self.t - 1) % self.k as u64) as usize);
        }
        if self.pools.is_empty() {
            return Err(Error::PoolMissing);
        }
        let j = self.pick_draw();
        Ok(self.draw_action(j, x))
    }

    fn update(&mut self, x: &[f64], action: usize, reward: f64) -> Result<()> {
        let t = self.t;
        let enc = self.config.encoding;
        let m = enc.model_of(action);
        self.data_x[m].push(enc.encode(x, action, self.k));
        self.data_y[m].push(reward);
        if self.config.fg.is_some() {
            self.history.push(x.to_vec());
        }
        let warm = self.warmup_rounds();
        if t == warm || (t > warm && self.config.schedule.fires(t)) {
            self.refresh(t)?;
        } else if let (Some(fg), false) = (self.config.fg, self.pools.is_empty()) {
            let incs = self.fg_increments(x, fg.b);
            for (s, inc) in self.scores.iter_mut().zip(incs) {
                *s += inc;
            }
        }
        self.t += 1;
        Ok(())
    }

    fn policy_distribution(&mut self, x: &[f64]) -> Vec<f64> {
        self.votes(x)
    }

    fn as_forest(&self) -> Option<&BftsAgent> {
        Some(self)
    }

    fn as_forest_mut(&mut self) -> Option<&mut BftsAgent> {
        Some(self)
    }
}
