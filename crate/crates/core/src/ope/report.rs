use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{cluster_bootstrap, dr_estimate, ess, replay_run, snips, OutcomeModelSpec, ReplayResult};
use crate::agents::Agent;
use crate::env::LoggedPanel;
use crate::error::{Error, Result};
use crate::rng::derive;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Snips,
    Dr,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Snips => "snips",
            Estimator::Dr => "dr",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snips" => Ok(Estimator::Snips),
            "dr" => Ok(Estimator::Dr),
            other => Err(Error::Config(format!("unknown estimator {other:?} (expected snips or dr)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpeConfig {
    pub estimators: Vec<Estimator>,
    /// Cluster-bootstrap replicates (0 disables the bootstrap).
    pub bootstrap: usize,
    /// Prefix lengths at which the estimators are evaluated; the full panel
    /// length is always added.
    pub checkpoints: Vec<usize>,
    pub outcome_model: OutcomeModelSpec,
    pub seed: u64,
}

impl Default for OpeConfig {
    fn default() -> Self {
        OpeConfig {
            estimators: vec![Estimator::Snips],
            bootstrap: 30,
            checkpoints: vec![1000, 2000, 5000, 10000],
            outcome_model: OutcomeModelSpec::default(),
            seed: 42,
        }
    }
}

/// One line of the OPE results file. `replicate` is empty for the full panel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpeRow {
    pub estimator: String,
    pub checkpoint: usize,
    pub value: f64,
    pub ess: f64,
    pub match_rate: f64,
    pub replicate: Option<usize>,
}

fn checkpoints(config: &OpeConfig, n: usize) -> Vec<usize> {
    let mut c: Vec<usize> = config.checkpoints.iter().copied().filter(|&c| c > 0 && c <= n).collect();
    c.push(n);
    c.sort_unstable();
    c.dedup();
    c
}

/// Estimates on each checkpoint prefix of one replay. A SNIPS prefix whose
/// weights are all zero is reported as NaN.
fn summarize(
    panel: &LoggedPanel,
    replay: &ReplayResult,
    config: &OpeConfig,
    replicate: Option<usize>,
) -> Result<Vec<OpeRow>> {
    let weights = replay.weights();
    let rewards = replay.rewards();
    let policies = replay.policies();
    let mut out = Vec::new();
    for c in checkpoints(config, panel.len()) {
        for &est in &config.estimators {
            let value = match est {
                Estimator::Snips => match snips(&weights[..c], &rewards[..c]) {
                    Err(Error::ZeroWeights) => f64::NAN,
                    v => v?,
                },
                Estimator::Dr => dr_estimate(&panel.prefix(c), &policies[..c], config.outcome_model)?,
            };
            out.push(OpeRow {
                estimator: est.name().into(),
                checkpoint: c,
                value,
                ess: ess(&weights[..c]),
                match_rate: replay.match_rate_prefix(c),
                replicate,
            });
        }
    }
    Ok(out)
}

/// Replays `panel` with a fresh agent and, if configured, with a fresh agent
/// on each cluster-bootstrap resample. `make_agent` receives the agent seed.
pub fn evaluate_policy<F>(panel: &LoggedPanel, config: &OpeConfig, make_agent: F) -> Result<Vec<OpeRow>>
where
    F: Fn(u64) -> Result<Box<dyn Agent>> + Sync,
{
    if panel.is_empty() {
        return Err(Error::NoData);
    }
    if config.estimators.is_empty() {
        return Err(Error::Config("no OPE estimator selected".into()));
    }
    let mut agent = make_agent(derive(config.seed, 0))?;
    let replay = replay_run(agent.as_mut(), panel)?;
    let mut rows = summarize(panel, &replay, config, None)?;
    if config.bootstrap > 0 {
        let reps = cluster_bootstrap(panel, config.bootstrap, derive(config.seed, 1), |i, resampled| {
            let mut agent = make_agent(derive(config.seed, 2 + i as u64))?;
            let replay = replay_run(agent.as_mut(), resampled)?;
            summarize(resampled, &replay, config, Some(i))
        })?;
        for r in reps {
            rows.extend(r?);
        }
    }
    Ok(rows)
}

pub fn write_ope_csv<W: Write>(rows: &[OpeRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<ope>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::UniformAgent;
    use crate::env::{generate_synthetic_panel, SyntheticPanelConfig};

    #[test]
    fn rows_cover_checkpoints_and_replicates() {
        let sp = generate_synthetic_panel(&SyntheticPanelConfig { n_clusters: 30, mean_steps: 40, ..Default::default() }, 1).unwrap();
        let config = OpeConfig {
            estimators: vec![Estimator::Snips, Estimator::Dr],
            bootstrap: 3,
            checkpoints: vec![100, 500],
            ..Default::default()
        };
        let rows = evaluate_policy(&sp.panel, &config, |s| Ok(Box::new(UniformAgent::logging(3, s)) as Box<dyn Agent>)).unwrap();
        let full: Vec<&OpeRow> = rows.iter().filter(|r| r.replicate.is_none()).collect();
        assert_eq!(full.len(), 6);
        assert_eq!(full[4].checkpoint, sp.panel.len());
        assert!(rows.iter().any(|r| r.replicate == Some(2)));
        let mut buf = Vec::new();
        write_ope_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("estimator,checkpoint,value,ess,match_rate,replicate\nsnips,100,"));
        let again = evaluate_policy(&sp.panel, &config, |s| Ok(Box::new(UniformAgent::logging(3, s)) as Box<dyn Agent>)).unwrap();
        assert_eq!(rows, again);
    }
}
