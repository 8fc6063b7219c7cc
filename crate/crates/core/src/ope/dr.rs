use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::env::LoggedPanel;
use crate::error::{Error, Result};

/// Outcome model used by the doubly-robust estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeModelSpec {
    /// Per-arm ridge regression with an unpenalized intercept, fitted on the
    /// other fold (rows split by index parity) and predicted on this one.
    CrossFitRidge { lambda: f64 },
}

impl Default for OutcomeModelSpec {
    fn default() -> Self {
        OutcomeModelSpec::CrossFitRidge { lambda: 1.0 }
    }
}

/// Ridge fit on `(x, y)` pairs; returns `[slopes..., intercept]`.
fn ridge_fit(xs: &[&[f64]], ys: &[f64], p: usize, lambda: f64) -> Vec<f64> {
    let d = p + 1;
    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut b = DVector::<f64>::zeros(d);
    let mut z = DVector::<f64>::zeros(d);
    for (x, &y) in xs.iter().zip(ys) {
        z.as_mut_slice()[..p].copy_from_slice(x);
        z[p] = 1.0;
        a.ger(1.0, &z, &z, 1.0);
        b.axpy(y, &z, 1.0);
    }
    for j in 0..p {
        a[(j, j)] += lambda;
    }
    let sol = match a.clone().cholesky() {
        Some(c) => c.solve(&b),
        None => a.lu().solve(&b).unwrap_or_else(|| DVector::zeros(d)),
    };
    sol.iter().copied().collect()
}

fn ridge_predict(coef: &[f64], x: &[f64]) -> f64 {
    let p = x.len();
    coef[..p].iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + coef[p]
}

/// Cross-fitted outcome predictions `q[i][a]`. An arm absent from the other
/// fold falls back to a fit on all of its rows; an arm never logged predicts 0.
pub fn cross_fit_ridge(panel: &LoggedPanel, lambda: f64) -> Vec<Vec<f64>> {
    let (p, k) = (panel.p, panel.k);
    let mut q = vec![vec![0.0; k]; panel.len()];
    for a in 0..k {
        let rows: Vec<usize> = (0..panel.len()).filter(|&i| panel.rows[i].action == a).collect();
        if rows.is_empty() {
            continue;
        }
        let fit_on = |sel: &[usize]| {
            let xs: Vec<&[f64]> = sel.iter().map(|&i| panel.rows[i].context.as_slice()).collect();
            let ys: Vec<f64> = sel.iter().map(|&i| panel.rows[i].reward).collect();
            ridge_fit(&xs, &ys, p, lambda)
        };
        let pooled = fit_on(&rows);
        for fold in 0..2 {
            let train: Vec<usize> = rows.iter().copied().filter(|i| i % 2 != fold).collect();
            let coef = if train.is_empty() { pooled.clone() } else { fit_on(&train) };
            for (i, qi) in q.iter_mut().enumerate().skip(fold).step_by(2) {
                qi[a] = ridge_predict(&coef, &panel.rows[i].context);
            }
        }
    }
    q
}

/// `(1/n) Σ_i [Σ_a π_e(a|x_i) q(x_i, a) + w_i (r_i − q(x_i, a_i))]` with
/// `w_i = π_e(a_i|x_i) / π_b(a_i|x_i)`.
pub fn dr_with_outcomes(panel: &LoggedPanel, policies: &[Vec<f64>], q: &[Vec<f64>]) -> Result<f64> {
    if panel.is_empty() {
        return Err(Error::NoData);
    }
    let mut total = 0.0;
    for (i, ((row, pi), qi)) in panel.rows.iter().zip(policies).zip(q).enumerate() {
        let pb = row.propensities[row.action];
        if !(pb > 0.0) {
            return Err(Error::PositivityViolation { row: i, action: row.action });
        }
        let plug_in: f64 = pi.iter().zip(qi).map(|(p, q)| p * q).sum();
        let w = pi[row.action] / pb;
        total += plug_in + w * (row.reward - qi[row.action]);
    }
    Ok(total / panel.len() as f64)
}

pub fn dr_estimate(panel: &LoggedPanel, policies: &[Vec<f64>], spec: OutcomeModelSpec) -> Result<f64> {
    let q = match spec {
        OutcomeModelSpec::CrossFitRidge { lambda } => cross_fit_ridge(panel, lambda),
    };
    dr_with_outcomes(panel, policies, &q)
}
