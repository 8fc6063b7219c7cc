use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-feature candidate split thresholds.
///
/// Thresholds are empirical quantiles of the observed column at `n_max`
/// evenly spaced levels `k / n_max`, `k = 0..n_max`, deduplicated. The quantile
/// at level `q` of a sorted column of length `n` is the element at index
/// `floor(q * n)`, so every threshold is an observed value.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitGrid<F> {
    thresholds: Vec<Vec<F>>,
}

impl<F: Real> SplitGrid<F> {
    /// Builds the grid from row-major data.
    pub fn build<R: AsRef<[F]>>(rows: &[R], n_max: usize) -> Result<Self> {
        let p = rows.first().map(|r| r.as_ref().len()).ok_or(Error::NoData)?;
        if p == 0 {
            return Err(Error::NoData);
        }
        let columns: Vec<Vec<F>> = (0..p).map(|j| rows.iter().map(|r| r.as_ref()[j]).collect()).collect();
        Self::from_columns(&columns, n_max)
    }

    /// Builds the grid from column-major data.
    pub fn from_columns(columns: &[Vec<F>], n_max: usize) -> Result<Self> {
        if columns.is_empty() || columns[0].is_empty() {
            return Err(Error::NoData);
        }
        let n_max = n_max.max(1);
        let thresholds = columns
            .iter()
            .map(|col| {
                let mut sorted = col.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite covariates"));
                let n = sorted.len();
                let mut out: Vec<F> = Vec::with_capacity(n_max.min(n));
                for k in 0..n_max {
                    let idx = k * n / n_max;
                    let v = sorted[idx.min(n - 1)];
                    if out.last() != Some(&v) {
                        out.push(v);
                    }
                }
                out
            })
            .collect();
        Ok(SplitGrid { thresholds })
    }

    /// Grid with explicit thresholds per feature; each list is sorted and deduplicated.
    pub fn from_thresholds(mut thresholds: Vec<Vec<F>>) -> Self {
        for t in &mut thresholds {
            t.sort_by(|a, b| a.partial_cmp(b).unwrap());
            t.dedup();
        }
        SplitGrid { thresholds }
    }

    pub fn n_features(&self) -> usize {
        self.thresholds.len()
    }

    pub fn thresholds(&self, feature: usize) -> &[F] {
        &self.thresholds[feature]
    }

    /// Thresholds strictly inside the open interval `(lo, hi)`; contiguous in the grid.
    #[inline]
    pub fn interior(&self, feature: usize, lo: F, hi: F) -> &[F] {
        let t = &self.thresholds[feature];
        let start = t.partition_point(|&c| c <= lo);
        let end = t.partition_point(|&c| c < hi);
        if start >= end {
            &[]
        } else {
            &t[start..end]
        }
    }

    /// Whether any threshold lies strictly inside `(lo, hi)`.
    #[inline]
    pub fn has_interior(&self, feature: usize, lo: F, hi: F) -> bool {
        let t = &self.thresholds[feature];
        if lo == F::neg_infinity() && hi == F::infinity() {
            return !t.is_empty();
        }
        let start = t.partition_point(|&c| c <= lo);
        start < t.len() && t[start] < hi
    }

    pub fn contains(&self, feature: usize, threshold: F) -> bool {
        self.thresholds[feature].binary_search_by(|c| c.partial_cmp(&threshold).unwrap()).is_ok()
    }
}
