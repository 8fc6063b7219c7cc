use std::path::PathBuf;

use super::config::ExperimentConfig;
use crate::diagnostics::report::write_table;
use crate::env::LoggedPanel;
use crate::error::{Error, Result};
use crate::ope::{evaluate_policy, OpeConfig, OpeRow};

/// Policies accepted by [`run_ope`].
pub const OPE_POLICIES: [&str; 5] = ["bfts", "lints", "linucb", "uniform", "logging"];

#[derive(Clone, Debug)]
pub struct OpeRequest {
    pub panel: PathBuf,
    pub policy: String,
    pub ope: OpeConfig,
    /// Output CSV; nothing is written when `None`.
    pub out: Option<PathBuf>,
}

/// Replays a logged panel with the requested policy, built from the agent
/// settings of `config`.
pub fn run_ope(req: &OpeRequest, config: &ExperimentConfig) -> Result<Vec<OpeRow>> {
    if !OPE_POLICIES.contains(&req.policy.as_str()) {
        return Err(Error::Config(format!(
            "unknown policy {:?} (expected one of {})",
            req.policy,
            OPE_POLICIES.join(", ")
        )));
    }
    let panel = LoggedPanel::from_csv(&req.panel)?;
    let (k, p) = (panel.k, panel.p);
    let rows = evaluate_policy(&panel, &req.ope, |seed| config.make_agent(&req.policy, k, p, seed))?;
    if let Some(out) = &req.out {
        if let Some(parent) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_table(out, "ope", &rows)?;
    }
    Ok(rows)
}
