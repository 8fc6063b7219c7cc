//! Command-line front end for running bandit experiments, off-policy
//! evaluation and diagnostics.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bandit_forest::diagnostics::diagnose_run;
use bandit_forest::env::TabularData;
use bandit_forest::harness::{run_experiment, run_ope, DatasetSection, ExperimentConfig, OpeRequest, RunArtifact};
use bandit_forest::ope::{Estimator, OpeConfig};
use bandit_forest::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bandit-forest", version, about = "Forest Thompson sampling for contextual bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run agents on a synthetic scenario.
    RunSynthetic {
        #[arg(long)]
        scenario: Option<String>,
        #[command(flatten)]
        common: RunArgs,
    },
    /// Run agents on a classification CSV turned into a bandit.
    RunDataset {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        label: String,
        /// Columns to one-hot encode even if numeric.
        #[arg(long, value_delimiter = ',')]
        categorical: Vec<String>,
        /// Columns to ignore.
        #[arg(long, value_delimiter = ',')]
        drop: Vec<String>,
        #[command(flatten)]
        common: RunArgs,
    },
    /// Replay-based off-policy evaluation on a logged panel CSV.
    RunOpe {
        #[arg(long)]
        panel: PathBuf,
        /// bfts, lints, linucb, uniform or logging.
        #[arg(long, default_value = "bfts")]
        policy: String,
        /// snips, dr, or a comma-separated list.
        #[arg(long, value_delimiter = ',', default_value = "snips")]
        estimator: Vec<String>,
        #[arg(long, default_value_t = 30)]
        bootstrap: usize,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Agent settings (TOML experiment config).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "ope.csv")]
        out: PathBuf,
    },
    /// Recompute diagnostics tables from a run's stored snapshots.
    Diagnose {
        #[arg(long)]
        run: PathBuf,
    },
    /// Print the full default configuration.
    DumpConfig,
}

#[derive(Args)]
struct RunArgs {
    /// Base TOML config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated agent names.
    #[arg(long, value_delimiter = ',')]
    agents: Option<Vec<String>>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write forest serializations at refresh rounds.
    #[arg(long)]
    dump_forest: bool,
    /// Skip diagnostics snapshots.
    #[arg(long)]
    no_snapshots: bool,
    /// Write 0 in the wall-time column so reruns are byte-identical.
    #[arg(long)]
    no_wall_time: bool,
}

impl RunArgs {
    fn apply(&self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        if let Some(a) = &self.agents {
            cfg.agents = a.clone();
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(r) = self.reps {
            cfg.replications = r;
        }
        if let Some(s) = self.seed {
            cfg.global_seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.dump_forest |= self.dump_forest;
        cfg.snapshots &= !self.no_snapshots;
        cfg.wall_time &= !self.no_wall_time;
        cfg
    }
}

fn base_config(path: Option<&Path>) -> Result<ExperimentConfig, Error> {
    match path {
        Some(p) => ExperimentConfig::from_file(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn print_summary(art: &RunArtifact, out: &Path) {
    for s in &art.summary {
        println!(
            "{} {}: final regret {:.3} ± {:.3} over {} replications",
            s.scenario, s.agent, s.mean, s.sd, s.replications
        );
    }
    println!("artifacts written to {}", out.display());
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::RunSynthetic { scenario, common } => {
            let mut cfg = base_config(common.config.as_deref())?;
            if let Some(s) = scenario {
                cfg.scenario = s;
                cfg.dataset = None;
            }
            let cfg = common.apply(cfg);
            let art = run_experiment(&cfg)?;
            print_summary(&art, &cfg.out_dir);
        }
        Command::RunDataset {
            csv,
            label,
            categorical,
            drop,
            common,
        } => {
            let mut cfg = base_config(common.config.as_deref())?;
            let dataset = DatasetSection {
                csv,
                label,
                categorical,
                drop,
            };
            if common.horizon.is_none() {
                cfg.horizon = TabularData::from_csv(&dataset.csv, &dataset.label, &dataset.options())?.len();
            }
            cfg.dataset = Some(dataset);
            let cfg = common.apply(cfg);
            let art = run_experiment(&cfg)?;
            print_summary(&art, &cfg.out_dir);
        }
        Command::RunOpe {
            panel,
            policy,
            estimator,
            bootstrap,
            checkpoints,
            seed,
            config,
            out,
        } => {
            let cfg = base_config(config.as_deref())?;
            let mut ope = OpeConfig {
                estimators: estimator.iter().map(|e| e.parse()).collect::<Result<Vec<Estimator>, _>>()?,
                bootstrap,
                seed: seed.unwrap_or(cfg.global_seed),
                ..OpeConfig::default()
            };
            if let Some(c) = checkpoints {
                ope.checkpoints = c;
            }
            let rows = run_ope(
                &OpeRequest {
                    panel,
                    policy,
                    ope,
                    out: Some(out.clone()),
                },
                &cfg,
            )?;
            for r in rows.iter().filter(|r| r.replicate.is_none()) {
                println!(
                    "{} t={}: value {:.6} ess {:.1} match_rate {:.4}",
                    r.estimator, r.checkpoint, r.value, r.ess, r.match_rate
                );
            }
            println!("results written to {}", out.display());
        }
        Command::Diagnose { run } => {
            let t = diagnose_run(&run)?;
            println!(
                "recomputed {} coverage, {} ece, {} rhat, {} acceptance, {} policy_tv, {} feature_inclusion rows in {}",
                t.coverage.len(),
                t.ece.len(),
                t.rhat.len(),
                t.acceptance.len(),
                t.policy_tv.len(),
                t.feature_inclusion.len(),
                run.display()
            );
        }
        Command::DumpConfig => print!("{}", ExperimentConfig::default().to_toml_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = if e.is_config() || matches!(e, Error::Io { .. }) { "config" } else { "runtime" };
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{kind}]: {msg}");
            ExitCode::from(if kind == "config" { 2 } else { 3 })
        }
    }
}
