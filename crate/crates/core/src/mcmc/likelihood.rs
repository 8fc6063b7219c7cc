//! Conjugate pieces of the sampler: marginal likelihood of a leaf, the leaf,
//! noise-variance and split-axis full conditionals, and calibration of the
//! noise prior scale.

use rand::Rng;
use statrs::function::gamma::gamma_ur;

use crate::scalar::{self, Real};

/// `log ∫ Π N(r_i | μ, σ²) N(μ | 0, σ_μ²) dμ` from the sufficient statistics
/// `n`, `S = Σ r_i` and `SS = Σ r_i²`.
pub fn leaf_marginal_loglik<F: Real>(n: usize, sum: F, sum_sq: F, sigma2: F, sigma_mu2: F) -> F {
    if n == 0 {
        return F::zero();
    }
    let nf = F::lit(n as f64);
    let two = F::lit(2.0);
    let tau = sigma2 + nf * sigma_mu2;
    -nf / two * (F::lit(std::f64::consts::TAU) * sigma2).ln() + (sigma2 / tau).ln() / two - sum_sq / (two * sigma2)
        + sigma_mu2 * sum * sum / (two * sigma2 * tau)
}

/// The part of [`leaf_marginal_loglik`] that varies with the partition of a
/// fixed set of rows. Differences of this quantity between two partitions of
/// the same rows equal differences of the full marginal.
#[inline]
pub fn leaf_partition_term<F: Real>(n: u32, sum: F, sigma2: F, sigma_mu2: F) -> F {
    if n == 0 {
        return F::zero();
    }
    let nf = F::lit(n as f64);
    let tau = sigma2 + nf * sigma_mu2;
    let half = F::lit(0.5);
    half * (sigma2 / tau).ln() + half * sigma_mu2 * sum * sum / (sigma2 * tau)
}

/// Mean and variance of the conjugate leaf full conditional.
pub fn leaf_posterior<F: Real>(n: u32, sum: F, sigma2: F, sigma_mu2: F) -> (F, F) {
    let prec = F::lit(n as f64) + sigma2 / sigma_mu2;
    (sum / prec, sigma2 / prec)
}

pub fn gibbs_leaf_draw<F: Real, R: Rng + ?Sized>(n: u32, sum: F, sigma2: F, sigma_mu2: F, rng: &mut R) -> F {
    let (mean, var) = leaf_posterior(n, sum, sigma2, sigma_mu2);
    scalar::normal(rng, mean, var.sqrt())
}

/// Draw from `InvGamma((ν + n)/2, (ν λ + SSE)/2)`.
pub fn gibbs_sigma_update<F: Real, R: Rng + ?Sized>(n: usize, sse: F, nu: F, lambda: F, rng: &mut R) -> F {
    let two = F::lit(2.0);
    scalar::inv_gamma(rng, (nu + F::lit(n as f64)) / two, (nu * lambda + sse) / two)
}

/// Draw from `Dir(alpha + c_1, ..., alpha + c_p)`.
pub fn gibbs_split_axis_update<F: Real, R: Rng + ?Sized>(counts: &[usize], alpha: F, rng: &mut R) -> Vec<F> {
    let conc: Vec<F> = counts.iter().map(|&c| alpha + F::lit(c as f64)).collect();
    scalar::dirichlet(rng, &conc)
}

/// CDF of `InvGamma(shape, scale)` at `x`.
pub fn inv_gamma_cdf(shape: f64, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_ur(shape, scale / x)
}

/// λ such that `Pr(σ² < σ̂²) = q` when `σ² ~ InvGamma(ν/2, νλ/2)`.
pub fn calibrate_lambda_sigma(sigma_hat: f64, nu: f64, q: f64) -> f64 {
    // With z = νλ / (2σ̂²) the condition is Q(ν/2, z) = q; Q falls in z.
    let a = nu / 2.0;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while gamma_ur(a, hi) > q {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_ur(a, mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    let z = 0.5 * (lo + hi);
    2.0 * sigma_hat * sigma_hat * z / nu
}

/// Sample standard deviation, with the fallback 0.1 below two observations.
pub fn sigma_hat<F: Real>(y: &[F]) -> F {
    if y.len() < 2 {
        return F::lit(0.1);
    }
    let n = F::lit(y.len() as f64);
    let mean = y.iter().copied().sum::<F>() / n;
    let ss: F = y.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (ss / (n - F::one())).sqrt()
}
