use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BanditEnvironment, InteractionStream};
use crate::error::{Error, Result};
use crate::forest::prior::{sample_tree_from_prior, PriorConfig, SplitAxisPrior, SplitAxisProbs, StructurePrior};
use crate::forest::{Forest, SplitGrid};
use crate::rng::{derive, stream};
use crate::scalar;

/// `10 sin(π x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5`.
pub fn friedman1(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

/// Rescaled coordinates shared by the second and third Friedman functions,
/// returning `(x1', x2' x3' - 1 / (x2' x4'))`.
fn friedman_rescaled(x: &[f64]) -> (f64, f64) {
    let x1 = 100.0 * x[0];
    let x2 = 40.0 * PI + 520.0 * PI * x[1];
    let x3 = x[2];
    let x4 = 1.0 + 10.0 * x[3];
    (x1, x2 * x3 - 1.0 / (x2 * x4))
}

pub fn friedman2(x: &[f64]) -> f64 {
    let (a, b) = friedman_rescaled(x);
    (a * a + b * b).sqrt() / 125.0
}

/// At `x1' = 0` the arctangent takes its limit `±π/2` (0 when the numerator
/// is also 0).
pub fn friedman3(x: &[f64]) -> f64 {
    let (a, b) = friedman_rescaled(x);
    let angle = if a == 0.0 {
        if b > 0.0 {
            PI / 2.0
        } else if b < 0.0 {
            -PI / 2.0
        } else {
            0.0
        }
    } else {
        (b / a).atan()
    };
    angle / 0.1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FriedmanFn {
    F1,
    F2,
    F3,
}

impl FriedmanFn {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            FriedmanFn::F1 => friedman1(x),
            FriedmanFn::F2 => friedman2(x),
            FriedmanFn::F3 => friedman3(x),
        }
    }

    fn min_dim(self) -> usize {
        match self {
            FriedmanFn::F1 => 5,
            FriedmanFn::F2 | FriedmanFn::F3 => 4,
        }
    }
}

/// How the second arm's mean relates to the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmVariant {
    /// `f(x) + 5 sin(π x1 x2)`.
    Shared,
    /// `f` applied to the reversed context.
    Disjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticKind {
    /// `μ_a(x) = β_a' x` with `β_aj ~ N(0, 1)` for `j < d`, zero after.
    Linear { p: usize, k: usize, d: usize },
    /// Two arms built from a Friedman function.
    Friedman {
        function: FriedmanFn,
        variant: ArmVariant,
        p: usize,
        heteroscedastic: bool,
    },
    /// Each arm's mean is a frozen draw from the sum-of-trees prior.
    SynBart { p: usize, k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    /// Reward noise SD (ignored by heteroscedastic scenarios).
    pub noise_sd: f64,
}

impl SyntheticSpec {
    pub fn by_name(name: &str) -> Result<Self> {
        let friedman = |function, variant, p, heteroscedastic| SyntheticKind::Friedman {
            function,
            variant,
            p,
            heteroscedastic,
        };
        use ArmVariant::*;
        use FriedmanFn::*;
        let (kind, noise_sd) = match name {
            "linear" => (SyntheticKind::Linear { p: 10, k: 3, d: 10 }, 1.0),
            "friedman" => (friedman(F1, Shared, 5, false), 1.0),
            "friedman2" => (friedman(F2, Shared, 5, false), 1.0),
            "friedman3" => (friedman(F3, Shared, 5, false), 1.0),
            "friedman_disjoint" => (friedman(F1, Disjoint, 5, false), 1.0),
            "friedman_sparse" => (friedman(F1, Shared, 20, false), 1.0),
            "friedman_sparse_disjoint" => (friedman(F1, Disjoint, 20, false), 1.0),
            "friedman_heteroscedastic" => (friedman(F1, Shared, 5, true), 1.0),
            "synbart" => (SyntheticKind::SynBart { p: 4, k: 3 }, 0.1),
            other => return Err(Error::Config(format!("unknown scenario {other:?}"))),
        };
        Ok(SyntheticSpec { kind, noise_sd })
    }

    pub const NAMES: [&'static str; 9] = [
        "linear",
        "friedman",
        "friedman2",
        "friedman3",
        "friedman_disjoint",
        "friedman_sparse",
        "friedman_sparse_disjoint",
        "friedman_heteroscedastic",
        "synbart",
    ];

    pub fn dim(&self) -> usize {
        match self.kind {
            SyntheticKind::Linear { p, .. } | SyntheticKind::Friedman { p, .. } | SyntheticKind::SynBart { p, .. } => p,
        }
    }

    pub fn n_arms(&self) -> usize {
        match self.kind {
            SyntheticKind::Linear { k, .. } | SyntheticKind::SynBart { k, .. } => k,
            SyntheticKind::Friedman { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self.kind {
            SyntheticKind::Linear { p, k, d } if p == 0 || k < 2 || d > p => {
                bad(format!("linear scenario needs p >= 1, k >= 2, d <= p (got p={p}, k={k}, d={d})"))
            }
            SyntheticKind::Friedman { function, p, .. } if p < function.min_dim() => {
                bad(format!("Friedman scenario needs at least {} features", function.min_dim()))
            }
            SyntheticKind::SynBart { p, k } if p == 0 || k < 2 => bad("synbart needs p >= 1 and k >= 2".into()),
            _ if !(self.noise_sd >= 0.0) => bad("noise_sd must be non-negative".into()),
            _ => Ok(()),
        }
    }
}

/// Prior used to draw the arm functions of the SynBART scenario.
pub fn synbart_prior() -> PriorConfig<f64> {
    PriorConfig {
        m: 100,
        structure: StructurePrior::DepthGeometric { alpha: 0.45 },
        kappa: 2.0,
        n_max: 100,
        split_axis: SplitAxisPrior::DirichletSparse { zeta: 1.0, xi: 1.0 },
        ..PriorConfig::default()
    }
}

/// Points used to build the SynBART split grid.
const SYNBART_GRID_POINTS: usize = 10_000;

/// A synthetic scenario with its per-replication parameters drawn.
#[derive(Clone, Debug)]
pub struct SyntheticEnv {
    pub spec: SyntheticSpec,
    pub betas: Vec<Vec<f64>>,
    pub arm_sd: Vec<f64>,
    pub forests: Vec<Forest<f64>>,
}

impl SyntheticEnv {
    pub fn new(spec: SyntheticSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = stream(seed);
        let k = spec.n_arms();
        let mut env = SyntheticEnv {
            spec,
            betas: Vec::new(),
            arm_sd: vec![spec.noise_sd; k],
            forests: Vec::new(),
        };
        match spec.kind {
            SyntheticKind::Linear { p, d, .. } => {
                env.betas = (0..k)
                    .map(|_| (0..p).map(|j| if j < d { scalar::normal(&mut rng, 0.0, 1.0) } else { 0.0 }).collect())
                    .collect();
            }
            SyntheticKind::Friedman { heteroscedastic: true, .. } => {
                env.arm_sd = (0..k)
                    .map(|_| 10f64.powf(rng.random_range(-1.0..1.0)).sqrt())
                    .collect();
            }
            SyntheticKind::Friedman { .. } => {}
            SyntheticKind::SynBart { p, .. } => {
                env.forests = synbart_forests(&synbart_prior(), p, k, &mut rng)?;
            }
        }
        Ok(env)
    }

    /// Arm noise variances.
    pub fn arm_variances(&self) -> Vec<f64> {
        self.arm_sd.iter().map(|s| s * s).collect()
    }

    pub fn means(&self, x: &[f64]) -> Vec<f64> {
        match self.spec.kind {
            SyntheticKind::Linear { .. } => self
                .betas
                .iter()
                .map(|b| b.iter().zip(x).map(|(b, x)| b * x).sum())
                .collect(),
            SyntheticKind::Friedman { function, variant, .. } => {
                let f = function.eval(x);
                let second = match variant {
                    ArmVariant::Shared => f + 5.0 * (PI * x[0] * x[1]).sin(),
                    ArmVariant::Disjoint => {
                        let rev: Vec<f64> = x.iter().rev().copied().collect();
                        function.eval(&rev)
                    }
                };
                vec![f, second]
            }
            SyntheticKind::SynBart { .. } => self.forests.iter().map(|f| f.predict(x)).collect(),
        }
    }
}

/// Draws one frozen prior forest per arm, with the split grid built from
/// uniform points.
pub fn synbart_forests<R: Rng + ?Sized>(
    prior: &PriorConfig<f64>,
    p: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Forest<f64>>> {
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..SYNBART_GRID_POINTS).map(|_| rng.random::<f64>()).collect())
        .collect();
    let grid = SplitGrid::from_columns(&cols, prior.n_max)?;
    Ok((0..k)
        .map(|_| {
            let s = SplitAxisProbs::from_prior(prior, p, rng);
            Forest::new((0..prior.m).map(|_| sample_tree_from_prior(prior, &grid, &s, rng)).collect())
        })
        .collect())
}

impl BanditEnvironment for SyntheticEnv {
    fn n_arms(&self) -> usize {
        self.spec.n_arms()
    }

    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn materialize(&self, horizon: usize, seed: u64) -> Result<InteractionStream> {
        let mut ctx_rng = stream(derive(seed, 0));
        let mut noise_rng = stream(derive(seed, 1));
        let p = self.dim();
        let mut contexts = Vec::with_capacity(horizon);
        let mut means = Vec::with_capacity(horizon);
        let mut rewards = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let x: Vec<f64> = (0..p).map(|_| ctx_rng.random::<f64>()).collect();
            let mu = self.means(&x);
            let r: Vec<f64> = mu
                .iter()
                .zip(&self.arm_sd)
                .map(|(&m, &sd)| m + sd * scalar::normal(&mut noise_rng, 0.0, 1.0))
                .collect();
            contexts.push(x);
            means.push(mu);
            rewards.push(r);
        }
        Ok(InteractionStream { contexts, means, rewards })
    }

    fn mean_rewards(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.means(x))
    }
}
