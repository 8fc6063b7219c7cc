use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::encoding::Encoding;
use super::{argmax_min_index, Agent};
use crate::error::Result;
use crate::rng::{derive, stream, StreamRng};
use crate::scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinearKind {
    /// Thompson sampling from `N(mean, nu^2 A^{-1})`.
    Ts { nu: f64 },
    /// Upper confidence bound `mean + alpha * sqrt(z' A^{-1} z)`.
    Ucb { alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub kind: LinearKind,
    pub ridge: f64,
    pub encoding: Encoding,
}

impl LinearConfig {
    pub fn lin_ts() -> Self {
        LinearConfig {
            kind: LinearKind::Ts { nu: 0.1 },
            ridge: 1.0,
            encoding: Encoding::Separate,
        }
    }

    pub fn lin_ucb() -> Self {
        LinearConfig {
            kind: LinearKind::Ucb { alpha: 1.0 },
            ridge: 1.0,
            encoding: Encoding::Separate,
        }
    }
}

/// Ridge regression accumulator `A = ridge I + Σ z z'`, `b = Σ z r`.
#[derive(Clone, Debug)]
pub struct RidgeModel {
    a: DMatrix<f64>,
    b: DVector<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl RidgeModel {
    pub fn new(dim: usize, ridge: f64) -> Self {
        RidgeModel {
            a: DMatrix::identity(dim, dim) * ridge,
            b: DVector::zeros(dim),
            chol: None,
        }
    }

    pub fn add(&mut self, z: &[f64], r: f64) {
        let z = DVector::from_column_slice(z);
        self.a.ger(1.0, &z, &z, 1.0);
        self.b.axpy(r, &z, 1.0);
        self.chol = None;
    }

    fn chol(&mut self) -> &Cholesky<f64, Dyn> {
        if self.chol.is_none() {
            self.chol = Some(Cholesky::new(self.a.clone()).expect("ridge accumulator is positive definite"));
        }
        self.chol.as_ref().unwrap()
    }

    pub fn mean(&mut self) -> DVector<f64> {
        let b = self.b.clone();
        self.chol().solve(&b)
    }

    /// `z' A^{-1} z`.
    pub fn quad(&mut self, z: &[f64]) -> f64 {
        let z = DVector::from_column_slice(z);
        z.dot(&self.chol().solve(&z))
    }

    /// Draw from `N(mean, scale^2 A^{-1})`.
    pub fn sample(&mut self, scale: f64, rng: &mut StreamRng) -> DVector<f64> {
        let mean = self.mean();
        let dim = mean.len();
        let xi = DVector::from_iterator(dim, (0..dim).map(|_| scalar::normal(rng, 0.0, 1.0)));
        // A = L L'  =>  L'^{-1} xi has covariance A^{-1}.
        let l = self.chol().l();
        let v = l
            .transpose()
            .solve_upper_triangular(&xi)
            .expect("Cholesky factor is invertible");
        mean + v * scale
    }
}

/// Linear Thompson sampling or LinUCB with a configurable arm encoding.
pub struct LinearAgent {
    name: String,
    config: LinearConfig,
    k: usize,
    models: Vec<RidgeModel>,
    rng: StreamRng,
    policy_rng: StreamRng,
    t: u64,
    z: Vec<f64>,
}

impl LinearAgent {
    pub fn new(name: impl Into<String>, config: LinearConfig, k: usize, p: usize, seed: u64) -> Self {
        let dim = config.encoding.dim(k, p);
        LinearAgent {
            name: name.into(),
            config,
            k,
            models: (0..config.encoding.n_models(k))
                .map(|_| RidgeModel::new(dim, config.ridge))
                .collect(),
            rng: stream(derive(seed, 0)),
            policy_rng: stream(derive(seed, 1)),
            t: 1,
            z: Vec::new(),
        }
    }

    pub fn model_mut(&mut self, arm: usize) -> &mut RidgeModel {
        let m = self.config.encoding.model_of(arm);
        &mut self.models[m]
    }

    fn scores(&mut self, x: &[f64], sample_rng: Option<&mut StreamRng>) -> Vec<f64> {
        let enc = self.config.encoding;
        let k = self.k;
        match self.config.kind {
            LinearKind::Ts { nu } => {
                let rng = sample_rng.expect("Thompson sampling needs an RNG");
                let thetas: Vec<DVector<f64>> = self.models.iter_mut().map(|m| m.sample(nu, rng)).collect();
                (0..k)
                    .map(|a| {
                        enc.encode_into(x, a, k, &mut self.z);
                        let theta = &thetas[enc.model_of(a)];
                        self.z.iter().zip(theta.iter()).map(|(z, t)| z * t).sum()
                    })
                    .collect()
            }
            LinearKind::Ucb { alpha } => (0..k)
                .map(|a| {
                    let z = enc.encode(x, a, k);
                    let m = &mut self.models[enc.model_of(a)];
                    let mean = m.mean();
                    let mu: f64 = z.iter().zip(mean.iter()).map(|(z, t)| z * t).sum();
                    mu + alpha * m.quad(&z).max(0.0).sqrt()
                })
                .collect(),
        }
    }
}

/// Monte Carlo draws used to approximate the Thompson sampling policy.
const POLICY_DRAWS: usize = 256;

impl Agent for LinearAgent {
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
        let mut rng = self.rng.clone();
        let s = self.scores(x, Some(&mut rng));
        self.rng = rng;
        Ok(argmax_min_index(&s))
    }

    fn update(&mut self, x: &[f64], action: usize, reward: f64) -> Result<()> {
        let z = self.config.encoding.encode(x, action, self.k);
        self.model_mut(action).add(&z, reward);
        self.t += 1;
        Ok(())
    }

    fn policy_distribution(&mut self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        match self.config.kind {
            LinearKind::Ucb { .. } => out[argmax_min_index(&self.scores(x, None))] = 1.0,
            LinearKind::Ts { .. } => {
                let mut rng = self.policy_rng.clone();
                for _ in 0..POLICY_DRAWS {
                    out[argmax_min_index(&self.scores(x, Some(&mut rng)))] += 1.0 / POLICY_DRAWS as f64;
                }
                self.policy_rng = rng;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_data_zero_scale_ties_to_first_arm() {
        let cfg = LinearConfig {
            kind: LinearKind::Ts { nu: 0.0 },
            ..LinearConfig::lin_ts()
        };
        let mut agent = LinearAgent::new("lints", cfg, 3, 2, 1);
        assert_eq!(agent.select(&[0.4, 0.6]).unwrap(), 0);
    }

    #[test]
    fn single_observation_posterior_mean() {
        let mut m = RidgeModel::new(1, 1.0);
        m.add(&[1.0], 1.0);
        assert!((m.mean()[0] - 0.5).abs() < 1e-15);
        assert!((m.quad(&[1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ts_draw_covariance_matches_inverse_design() {
        let mut m = RidgeModel::new(2, 1.0);
        m.add(&[1.0, 0.5], 0.3);
        m.add(&[0.2, 1.0], -0.1);
        let mut rng = stream(3);
        let n = 100_000;
        let mean = m.mean();
        let mut cov = [[0.0; 2]; 2];
        for _ in 0..n {
            let d = m.sample(1.0, &mut rng) - &mean;
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += d[i] * d[j] / n as f64;
                }
            }
        }
        let inv = m.a.clone().try_inverse().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((cov[i][j] - inv[(i, j)]).abs() < 0.01, "{cov:?} vs {inv}");
            }
        }
    }

    #[test]
    fn ucb_prefers_unexplored_arm() {
        let mut agent = LinearAgent::new("linucb", LinearConfig::lin_ucb(), 2, 1, 1);
        for _ in 0..50 {
            agent.update(&[1.0], 0, 0.1).unwrap();
        }
        assert_eq!(agent.select(&[1.0]).unwrap(), 1);
        let pi = agent.policy_distribution(&[1.0]);
        assert_eq!(pi, vec![0.0, 1.0]);
    }
}
