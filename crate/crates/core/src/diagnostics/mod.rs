//! Posterior-uncertainty, MCMC and decision-stability diagnostics.

pub mod report;
pub mod snapshot;

pub use report::{diagnose_run, DiagnosticTables};
pub use snapshot::{ProbeSet, Snapshot, SnapshotKind, ECE_LEVELS, INTERVAL_LEVEL};

use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::scalar::nearest_rank;

/// Central nearest-rank interval holding `level` of the draws.
pub fn credible_interval(draws: &[f64], level: f64) -> (f64, f64) {
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    interval_sorted(&sorted, level)
}

pub(crate) fn interval_sorted(sorted: &[f64], level: f64) -> (f64, f64) {
    let tail = (1.0 - level) / 2.0;
    (nearest_rank(sorted, tail), nearest_rank(sorted, 1.0 - tail))
}

pub fn covers(interval: (f64, f64), truth: f64) -> bool {
    interval.0 <= truth && truth <= interval.1
}

/// Share of intervals containing their truth and mean interval length.
pub fn coverage_and_length(intervals: &[(f64, f64)], truths: &[f64]) -> (f64, f64) {
    let n = intervals.len() as f64;
    let hits = intervals.iter().zip(truths).filter(|(i, t)| covers(**i, **t)).count() as f64;
    let len = intervals.iter().map(|(lo, hi)| hi - lo).sum::<f64>();
    (hits / n, len / n)
}

/// Mean absolute gap between empirical and nominal coverage over levels.
pub fn ece(levels: &[f64], coverages: &[f64]) -> f64 {
    levels.iter().zip(coverages).map(|(g, c)| (c - g).abs()).sum::<f64>() / levels.len() as f64
}

/// ECE of per-item draw sets against their truths.
pub fn ece_from_draws(draws: &[Vec<f64>], truths: &[f64], levels: &[f64]) -> f64 {
    let sorted: Vec<Vec<f64>> = draws
        .iter()
        .map(|d| {
            let mut d = d.clone();
            d.sort_by(f64::total_cmp);
            d
        })
        .collect();
    let coverages: Vec<f64> = levels
        .iter()
        .map(|&g| {
            let hits = sorted.iter().zip(truths).filter(|(d, t)| covers(interval_sorted(d, g), **t)).count();
            hits as f64 / truths.len() as f64
        })
        .collect();
    ece(levels, &coverages)
}

/// Gelman-Rubin potential scale reduction `sqrt((W + B/n) / W)` of
/// equal-length chains, so chains with equal means give exactly 1. Constant
/// identical chains give 1; a zero within-chain variance is replaced by 1e-12.
pub fn r_hat(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 && b == 0.0 {
        return 1.0;
    }
    let w = if w == 0.0 { w + 1e-12 } else { w };
    let var_plus = w + b / n;
    (var_plus / w).sqrt()
}

const NORMALIZED_TOL: f64 = 1e-9;

/// Half-L1 distance between two distributions.
pub fn policy_delta_tv(now: &[f64], prev: &[f64]) -> Result<f64> {
    for d in [now, prev] {
        let sum: f64 = d.iter().sum();
        if (sum - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::NotNormalized { sum });
        }
    }
    Ok(0.5 * now.iter().zip(prev).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Share of split rules on each feature; uniform when there are no splits.
pub fn inclusion_from_counts(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Split counts per feature over a set of forests.
pub fn split_counts<'a, I>(forests: I, p: usize) -> Vec<u64>
where
    I: IntoIterator<Item = &'a Forest<f64>>,
{
    let mut counts = vec![0u64; p];
    for f in forests {
        for t in &f.trees {
            for j in t.split_features() {
                counts[j] += 1;
            }
        }
    }
    counts
}

pub fn feature_inclusion<'a, I>(forests: I, p: usize) -> Vec<f64>
where
    I: IntoIterator<Item = &'a Forest<f64>>,
{
    inclusion_from_counts(&split_counts(forests, p))
}

/// Cumulative inclusion mass with features ranked by decreasing share.
pub fn inclusion_frontier(inclusion: &[f64]) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = (0..inclusion.len()).collect();
    order.sort_by(|&a, &b| inclusion[b].total_cmp(&inclusion[a]).then(a.cmp(&b)));
    let mut acc = 0.0;
    order
        .into_iter()
        .map(|j| {
            acc += inclusion[j];
            (j, acc)
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
