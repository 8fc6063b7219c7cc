use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;

/// Tolerance on the behavior propensities summing to one.
pub const PROPENSITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct PanelRow {
    pub context: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub propensities: Vec<f64>,
    pub cluster_id: String,
    pub step: i64,
}

/// Logged interactions in replay order.
///
/// CSV columns, in this order and with these exact names:
/// `context_0..context_{p-1}, action, reward, prop_0..prop_{K-1}, cluster_id, step`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoggedPanel {
    pub p: usize,
    pub k: usize,
    pub rows: Vec<PanelRow>,
}

impl LoggedPanel {
    pub fn new(p: usize, k: usize, rows: Vec<PanelRow>) -> Result<Self> {
        let panel = LoggedPanel { p, k, rows };
        panel.validate()?;
        Ok(panel)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut last_step: HashMap<&str, i64> = HashMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            if r.context.len() != self.p || r.propensities.len() != self.k {
                return Err(Error::Format(format!("panel row {i}: wrong number of columns")));
            }
            if r.action >= self.k {
                return Err(Error::Format(format!("panel row {i}: action {} out of range", r.action)));
            }
            let sum: f64 = r.propensities.iter().sum();
            if (sum - 1.0).abs() > PROPENSITY_TOL || r.propensities.iter().any(|&q| !(q >= 0.0)) {
                return Err(Error::Format(format!(
                    "panel row {i}: propensities must be non-negative and sum to 1 (sum = {sum})"
                )));
            }
            if let Some(prev) = last_step.insert(r.cluster_id.as_str(), r.step) {
                if r.step <= prev {
                    return Err(Error::Format(format!(
                        "panel row {i}: step {} of cluster {:?} is not after step {prev}",
                        r.step, r.cluster_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Row indices per cluster, clusters in order of first appearance.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            let g = *index.entry(r.cluster_id.as_str()).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i);
        }
        groups
    }

    pub fn subset(&self, rows: &[usize]) -> LoggedPanel {
        LoggedPanel {
            p: self.p,
            k: self.k,
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn prefix(&self, n: usize) -> LoggedPanel {
        LoggedPanel {
            p: self.p,
            k: self.k,
            rows: self.rows[..n.min(self.len())].to_vec(),
        }
    }

    pub fn header(p: usize, k: usize) -> Vec<String> {
        let mut h: Vec<String> = (0..p).map(|j| format!("context_{j}")).collect();
        h.push("action".into());
        h.push("reward".into());
        h.extend((0..k).map(|a| format!("prop_{a}")));
        h.push("cluster_id".into());
        h.push("step".into());
        h
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, path)
    }

    pub fn from_reader<R: std::io::Read>(reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        let p = headers.iter().take_while(|h| h.starts_with("context_")).count();
        let k = headers.iter().filter(|h| h.starts_with("prop_")).count();
        if k == 0 || headers != Self::header(p, k) {
            return Err(Error::Format(format!(
                "{}: expected columns {}",
                path.display(),
                Self::header(p, k.max(1)).join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let num = |j: usize| -> Result<f64> {
                rec[j].parse::<f64>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    column: headers[j].clone(),
                    msg: e.to_string(),
                })
            };
            let int = |j: usize| -> Result<i64> {
                rec[j].parse::<i64>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    column: headers[j].clone(),
                    msg: e.to_string(),
                })
            };
            let context = (0..p).map(num).collect::<Result<Vec<_>>>()?;
            let action = int(p)?;
            if action < 0 || action as usize >= k {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    column: "action".into(),
                    msg: format!("action {action} outside 0..{k}"),
                });
            }
            let reward = num(p + 1)?;
            let propensities = (p + 2..p + 2 + k).map(num).collect::<Result<Vec<_>>>()?;
            let sum: f64 = propensities.iter().sum();
            if (sum - 1.0).abs() > PROPENSITY_TOL {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    column: "prop_*".into(),
                    msg: format!("propensities sum to {sum}, not 1"),
                });
            }
            rows.push(PanelRow {
                context,
                action: action as usize,
                reward,
                propensities,
                cluster_id: rec[p + 2 + k].to_string(),
                step: int(p + 3 + k)?,
            });
        }
        if rows.is_empty() {
            return Err(Error::NoData);
        }
        LoggedPanel::new(p, k, rows)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::header(self.p, self.k))?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.context.iter().map(|v| v.to_string()).collect();
            rec.push(r.action.to_string());
            rec.push(r.reward.to_string());
            rec.extend(r.propensities.iter().map(|v| v.to_string()));
            rec.push(r.cluster_id.clone());
            rec.push(r.step.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<panel>", e))?;
        Ok(())
    }
}

/// Parameters of a synthetic logged panel with linear Bernoulli rewards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPanelConfig {
    pub n_clusters: usize,
    /// Cluster lengths are uniform on `[mean_steps / 2, 3 mean_steps / 2]`.
    pub mean_steps: usize,
    pub p: usize,
    pub behavior: Vec<f64>,
}

impl Default for SyntheticPanelConfig {
    fn default() -> Self {
        SyntheticPanelConfig {
            n_clusters: 200,
            mean_steps: 50,
            p: 3,
            behavior: vec![0.4, 0.3, 0.3],
        }
    }
}

/// Seed of the bundled `data/synthetic_panel.csv`.
pub const BUNDLED_PANEL_SEED: u64 = 20_240_601;

/// A generated panel together with its true reward function
/// `μ(x, a) = intercept_a + slope_a · x`.
#[derive(Clone, Debug)]
pub struct SyntheticPanel {
    pub panel: LoggedPanel,
    pub intercepts: Vec<f64>,
    pub slopes: Vec<Vec<f64>>,
}

impl SyntheticPanel {
    pub fn mean(&self, x: &[f64], a: usize) -> f64 {
        self.intercepts[a] + self.slopes[a].iter().zip(x).map(|(b, x)| b * x).sum::<f64>()
    }

    /// Exact value of a context-independent policy under uniform contexts.
    pub fn true_value(&self, policy: &[f64]) -> f64 {
        let mid = vec![0.5; self.panel.p];
        policy.iter().enumerate().map(|(a, w)| w * self.mean(&mid, a)).sum()
    }
}

/// Generates clusters of unequal length and unfolds them step by step, so
/// rows are ordered by step and then by cluster. Contexts are uniform on the
/// 1e-6 grid in `[0, 1]^p` and rewards are Bernoulli with mean in `[0.2, 0.8]`.
pub fn generate_synthetic_panel(config: &SyntheticPanelConfig, seed: u64) -> Result<SyntheticPanel> {
    let k = config.behavior.len();
    if k < 2 || config.n_clusters == 0 || config.mean_steps < 2 || config.p == 0 {
        return Err(Error::Config("synthetic panel needs K >= 2, clusters >= 1, mean_steps >= 2, p >= 1".into()));
    }
    let mut rng = stream(seed);
    let p = config.p;
    let intercepts: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..0.4)).collect();
    let slopes: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..p).map(|_| rng.random_range(0.0..0.4 / p as f64)).collect())
        .collect();
    let lengths: Vec<usize> = (0..config.n_clusters)
        .map(|_| rng.random_range(config.mean_steps / 2..=3 * config.mean_steps / 2))
        .collect();
    let longest = lengths.iter().copied().max().unwrap_or(0);
    let mut out = SyntheticPanel {
        panel: LoggedPanel { p, k, rows: Vec::new() },
        intercepts,
        slopes,
    };
    for step in 0..longest {
        for (c, &len) in lengths.iter().enumerate() {
            if step >= len {
                continue;
            }
            let context: Vec<f64> = (0..p).map(|_| rng.random_range(0..=1_000_000) as f64 / 1e6).collect();
            let action = crate::scalar::categorical(&mut rng, &config.behavior);
            let mu = out.mean(&context, action);
            let reward = if rng.random::<f64>() < mu { 1.0 } else { 0.0 };
            out.panel.rows.push(PanelRow {
                context,
                action,
                reward,
                propensities: config.behavior.clone(),
                cluster_id: format!("u{c:03}"),
                step: step as i64,
            });
        }
    }
    out.panel.validate()?;
    Ok(out)
}
