use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{BftsAgent, BftsConfig, Encoding, FgConfig, LinearAgent, LinearConfig, LinearKind, RefreshSchedule, UniformAgent};
use crate::agents::Agent;
use crate::env::{SyntheticSpec, TabularOptions};
use crate::error::{Error, Result};
use crate::forest::{PriorConfig, ProposalProbs, SplitAxisPrior, StructurePrior};
use crate::mcmc::SamplerConfig;

/// Agent names accepted in `agents`.
pub const AGENT_NAMES: [&str; 6] = ["bfts", "fg_bfts", "lints", "linucb", "uniform", "logging"];

/// Sum-of-trees prior and sampler knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BartSection {
    pub n_trees: usize,
    /// Burn-in sweeps per chain.
    pub nskip: usize,
    /// Retained sweeps per chain.
    pub ndpost: usize,
    pub n_chains: usize,
    pub tree_alpha: f64,
    /// Depth exponent, used only when `quick_decay` is off.
    pub tree_beta: f64,
    /// Split probability `alpha^depth` instead of `alpha (1 + depth)^-beta`.
    pub quick_decay: bool,
    /// Leaf shrinkage κ.
    pub f_k: f64,
    /// Split-grid size cap per feature.
    pub max_bins: usize,
    /// Sparse Dirichlet prior on split axes instead of uniform.
    pub dirichlet_prior: bool,
    pub dirichlet_zeta: f64,
    pub dirichlet_xi: f64,
    pub nu: f64,
    pub q: f64,
    pub min_leaf_obs: u32,
    pub p_grow: f64,
    pub p_prune: f64,
    pub p_change: f64,
    pub p_swap: f64,
}

impl Default for BartSection {
    fn default() -> Self {
        BartSection {
            n_trees: 100,
            nskip: 500,
            ndpost: 500,
            n_chains: 4,
            tree_alpha: 0.45,
            tree_beta: 2.0,
            quick_decay: true,
            f_k: 2.0,
            max_bins: 100,
            dirichlet_prior: true,
            dirichlet_zeta: 1.0,
            dirichlet_xi: 1.0,
            nu: 3.0,
            q: 0.9,
            min_leaf_obs: 1,
            p_grow: 0.25,
            p_prune: 0.25,
            p_change: 0.4,
            p_swap: 0.1,
        }
    }
}

impl BartSection {
    pub fn sampler(&self) -> SamplerConfig<f64> {
        SamplerConfig {
            n_burn: self.nskip,
            n_post: self.ndpost,
            n_chains: self.n_chains,
            prior: PriorConfig {
                m: self.n_trees,
                structure: if self.quick_decay {
                    StructurePrior::DepthGeometric { alpha: self.tree_alpha }
                } else {
                    StructurePrior::Original {
                        alpha: self.tree_alpha,
                        beta: self.tree_beta,
                    }
                },
                kappa: self.f_k,
                n_max: self.max_bins,
                nu: self.nu,
                q: self.q,
                split_axis: if self.dirichlet_prior {
                    SplitAxisPrior::DirichletSparse {
                        zeta: self.dirichlet_zeta,
                        xi: self.dirichlet_xi,
                    }
                } else {
                    SplitAxisPrior::Uniform
                },
                proposals: ProposalProbs {
                    grow: self.p_grow,
                    prune: self.p_prune,
                    change: self.p_change,
                    swap: self.p_swap,
                },
            },
            fixed_sigma2: None,
            min_leaf_obs: self.min_leaf_obs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Logarithmic,
    SquareRoot,
    EveryN,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefreshSection {
    pub kind: ScheduleKind,
    /// Multiplier for the logarithmic and square-root schedules.
    pub c: f64,
    /// Period of the `every_n` schedule.
    pub n: u64,
    /// Round-robin pulls per arm before the first refresh.
    pub tau: u64,
}

impl Default for RefreshSection {
    fn default() -> Self {
        RefreshSection {
            kind: ScheduleKind::Logarithmic,
            c: 8.0,
            n: 100,
            tau: 5,
        }
    }
}

impl RefreshSection {
    pub fn schedule(&self) -> RefreshSchedule {
        match self.kind {
            ScheduleKind::Logarithmic => RefreshSchedule::Logarithmic { c: self.c },
            ScheduleKind::SquareRoot => RefreshSchedule::SquareRoot { c: self.c },
            ScheduleKind::EveryN => RefreshSchedule::EveryN { n: self.n },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FgSection {
    pub eta: f64,
    pub lambda: f64,
    pub b: f64,
}

impl Default for FgSection {
    fn default() -> Self {
        let d = FgConfig::default();
        FgSection {
            eta: d.eta,
            lambda: d.lambda,
            b: d.b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSection {
    pub ridge: f64,
    /// Posterior scale of LinTS.
    pub ts_nu: f64,
    /// Bonus multiplier of LinUCB.
    pub ucb_alpha: f64,
    pub encoding: Encoding,
}

impl Default for LinearSection {
    fn default() -> Self {
        LinearSection {
            ridge: 1.0,
            ts_nu: 0.1,
            ucb_alpha: 1.0,
            encoding: Encoding::Multi,
        }
    }
}

/// Classification dataset served as a bandit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub csv: PathBuf,
    pub label: String,
    pub categorical: Vec<String>,
    pub drop: Vec<String>,
}

impl DatasetSection {
    pub fn options(&self) -> TabularOptions {
        TabularOptions {
            categorical: self.categorical.clone(),
            drop: self.drop.clone(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Synthetic scenario name; ignored when `dataset` is set.
    pub scenario: String,
    /// Overrides the scenario's reward noise SD.
    pub noise_sd: Option<f64>,
    pub agents: Vec<String>,
    pub horizon: usize,
    pub replications: usize,
    pub global_seed: u64,
    pub eval_rounds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Probe contexts for uncertainty diagnostics.
    pub probes: usize,
    /// Store diagnostics snapshots of forest agents.
    pub snapshots: bool,
    /// Write forest serializations at refresh rounds.
    pub dump_forest: bool,
    /// Record cumulative wall time; when off the column is 0 and runs are
    /// byte-reproducible.
    pub wall_time: bool,
    pub encoding: Encoding,
    pub bart: BartSection,
    pub refresh: RefreshSection,
    pub fg: FgSection,
    pub linear: LinearSection,
    pub dataset: Option<DatasetSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: "friedman".into(),
            noise_sd: None,
            agents: vec!["bfts".into(), "lints".into(), "linucb".into()],
            horizon: 10_000,
            replications: 12,
            global_seed: 42,
            eval_rounds: vec![200, 500, 1000, 2000, 5000, 10_000],
            out_dir: PathBuf::from("runs/default"),
            probes: crate::diagnostics::snapshot::DEFAULT_PROBES,
            snapshots: true,
            dump_forest: false,
            wall_time: true,
            encoding: Encoding::Separate,
            bart: BartSection::default(),
            refresh: RefreshSection::default(),
            fg: FgSection::default(),
            linear: LinearSection::default(),
            dataset: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string() + &location(text, e.span())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Name used for the scenario column of artifacts.
    pub fn scenario_label(&self) -> String {
        match &self.dataset {
            Some(d) => d
                .csv
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into()),
            None => self.scenario.clone(),
        }
    }

    pub fn synthetic_spec(&self) -> Result<SyntheticSpec> {
        let mut spec = SyntheticSpec::by_name(&self.scenario)?;
        if let Some(sd) = self.noise_sd {
            spec.noise_sd = sd;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn bfts_config(&self, feel_good: bool) -> BftsConfig {
        BftsConfig {
            sampler: self.bart.sampler(),
            schedule: self.refresh.schedule(),
            tau: self.refresh.tau,
            encoding: self.encoding,
            fg: feel_good.then_some(FgConfig {
                eta: self.fg.eta,
                lambda: self.fg.lambda,
                b: self.fg.b,
            }),
        }
    }

    pub fn linear_config(&self, kind: LinearKind) -> LinearConfig {
        LinearConfig {
            kind,
            ridge: self.linear.ridge,
            encoding: self.linear.encoding,
        }
    }

    /// Builds agent `name` for `k` arms and `p` features.
    pub fn make_agent(&self, name: &str, k: usize, p: usize, seed: u64) -> Result<Box<dyn Agent>> {
        Ok(match name {
            "bfts" => Box::new(BftsAgent::new(name, self.bfts_config(false), k, seed)),
            "fg_bfts" => Box::new(BftsAgent::new(name, self.bfts_config(true), k, seed)),
            "lints" => Box::new(LinearAgent::new(name, self.linear_config(LinearKind::Ts { nu: self.linear.ts_nu }), k, p, seed)),
            "linucb" => Box::new(LinearAgent::new(
                name,
                self.linear_config(LinearKind::Ucb { alpha: self.linear.ucb_alpha }),
                k,
                p,
                seed,
            )),
            "uniform" => Box::new(UniformAgent::new(k, seed)),
            "logging" => Box::new(UniformAgent::logging(k, seed)),
            other => return Err(Error::Config(format!("unknown agent {other:?} (expected one of {})", AGENT_NAMES.join(", ")))),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.agents.is_empty() {
            return bad("no agents configured".into());
        }
        for a in &self.agents {
            if !AGENT_NAMES.contains(&a.as_str()) {
                return bad(format!("unknown agent {a:?} (expected one of {})", AGENT_NAMES.join(", ")));
            }
        }
        let mut seen = self.agents.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.agents.len() {
            return bad("agent listed twice".into());
        }
        match &self.dataset {
            None => {
                self.synthetic_spec()?;
            }
            Some(d) if d.label.is_empty() => return bad("dataset.label is required".into()),
            Some(_) => {}
        }
        self.bfts_config(false).validate()?;
        self.bfts_config(true).validate()?;
        if !(self.linear.ridge > 0.0) || !(self.linear.ts_nu > 0.0) || !(self.linear.ucb_alpha >= 0.0) {
            return bad("linear.ridge and linear.ts_nu must be positive, linear.ucb_alpha non-negative".into());
        }
        Ok(())
    }
}

fn location(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(s) => {
            let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}
