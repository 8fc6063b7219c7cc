//! Scalar abstraction shared by the numerical core.
//!
//! Tree, sampler, and estimator code is written against [`Real`], so the same
//! implementation runs in `f32` or `f64`. Random variates are generated in
//! `f64` and cast, which keeps the distribution code independent of the
//! scalar choice.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Floating point scalar usable throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Draws from `N(mean, sd^2)`.
pub fn normal<F: Real, R: Rng + ?Sized>(rng: &mut R, mean: F, sd: F) -> F {
    let z: f64 = StandardNormal.sample(rng);
    mean + sd * F::lit(z)
}

/// Draws from `Gamma(shape, rate)`.
pub fn gamma<F: Real, R: Rng + ?Sized>(rng: &mut R, shape: F, rate: F) -> F {
    let g = Gamma::new(shape.as_f64(), 1.0 / rate.as_f64()).expect("positive gamma parameters");
    F::lit(g.sample(rng))
}

/// Draws from `InvGamma(shape, scale)`, i.e. the reciprocal of `Gamma(shape, rate = scale)`.
pub fn inv_gamma<F: Real, R: Rng + ?Sized>(rng: &mut R, shape: F, scale: F) -> F {
    loop {
        let g = gamma::<f64, _>(rng, shape.as_f64(), scale.as_f64());
        if g > 0.0 {
            let v = 1.0 / g;
            if v.is_finite() {
                return F::lit(v);
            }
        }
    }
}

/// Draws from a Dirichlet distribution with the given concentration vector.
///
/// Works in log space: for `a < 1` a `Gamma(a)` variate is formed as
/// `Gamma(a + 1) * U^(1/a)`, so very small concentrations do not underflow
/// to an all-zero vector.
pub fn dirichlet<F: Real, R: Rng + ?Sized>(rng: &mut R, alpha: &[F]) -> Vec<F> {
    let logs: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            let a = a.as_f64();
            if a < 1.0 {
                let g: f64 = Gamma::new(a + 1.0, 1.0).expect("positive shape").sample(rng);
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                g.ln() + u.ln() / a
            } else {
                let g: f64 = Gamma::new(a, 1.0).expect("positive shape").sample(rng);
                g.ln()
            }
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| F::lit(w / total)).collect()
}

/// Index drawn with probability proportional to `weights` (non-negative, not all zero).
pub fn categorical<F: Real, R: Rng + ?Sized>(rng: &mut R, weights: &[F]) -> usize {
    let total: f64 = weights.iter().map(|w| w.as_f64()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        let w = w.as_f64();
        if w <= 0.0 {
            continue;
        }
        last_positive = i;
        if u < w {
            return i;
        }
        u -= w;
    }
    last_positive
}

/// Nearest-rank empirical quantile of an ascending slice: the value of rank
/// `ceil(level * n)` (1-based), clamped to the sample.
pub fn nearest_rank<F: Real>(sorted: &[F], level: f64) -> F {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    // Guard against 0.975 * 1000 = 975.0000000000001 style round-off.
    let rank = (level * n as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Index of the first maximum.
pub fn argmax<F: Real>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dirichlet_sums_to_one_for_tiny_concentrations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s: Vec<f64> = dirichlet(&mut rng, &[0.001; 50]);
            let total: f64 = s.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(s.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0f32, 0.0]), 0);
    }

    #[test]
    fn nearest_rank_of_one_to_thousand() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 0.025), 25.0);
        assert_eq!(nearest_rank(&v, 0.975), 975.0);
        assert_eq!(nearest_rank(&v, 0.0), 1.0);
        assert_eq!(nearest_rank(&v, 1.0), 1000.0);
    }

    #[test]
    fn categorical_skips_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let i = categorical(&mut rng, &[0.0, 2.0, 0.0, 1.0]);
            assert!(i == 1 || i == 3);
        }
    }
}
