use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::diagnostics::report::{write_table, DiagnosticTables, SNAPSHOT_FILE};
use crate::diagnostics::{ProbeSet, Snapshot, SnapshotKind};
use crate::env::{BanditEnvironment, ClassificationBanditEnv, InteractionStream, SyntheticEnv, TabularData};
use crate::error::{Error, Result};
use crate::forest::serialize::forest_to_string;
use crate::rng::{derive, fnv1a};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "BANDIT_FOREST_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRow {
    pub replication: usize,
    pub t: u64,
    pub agent: String,
    pub action: usize,
    pub reward: f64,
    pub regret: f64,
    pub cum_regret: f64,
    pub cum_wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub agent: String,
    pub scenario: String,
    pub mean: f64,
    pub sd: f64,
    pub replications: usize,
}

/// Hash of the contexts an agent was actually shown.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamRow {
    pub replication: usize,
    pub agent: String,
    pub context_hash: String,
}

#[derive(Clone, Debug, Default)]
pub struct ReplicationOutput {
    pub rounds: Vec<RoundRow>,
    pub streams: Vec<StreamRow>,
    pub snapshots: Vec<Snapshot>,
    pub forests: Vec<(String, String)>,
}

#[derive(Clone, Debug, Default)]
pub struct RunArtifact {
    pub rounds: Vec<RoundRow>,
    pub summary: Vec<SummaryRow>,
    pub streams: Vec<StreamRow>,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Option<DiagnosticTables>,
}

impl RunArtifact {
    /// Final cumulative regret of `agent` in each replication.
    pub fn final_regrets(&self, agent: &str) -> Vec<f64> {
        final_regrets(&self.rounds, agent)
    }
}

pub fn final_regrets(rounds: &[RoundRow], agent: &str) -> Vec<f64> {
    let mut last: Vec<(usize, u64, f64)> = Vec::new();
    for r in rounds.iter().filter(|r| r.agent == agent) {
        match last.iter_mut().find(|(rep, _, _)| *rep == r.replication) {
            Some(e) if r.t >= e.1 => *e = (r.replication, r.t, r.cum_regret),
            Some(_) => {}
            None => last.push((r.replication, r.t, r.cum_regret)),
        }
    }
    last.sort_by_key(|e| e.0);
    last.into_iter().map(|e| e.2).collect()
}

/// Mean and sample SD (n − 1 denominator, 0 for a single value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(rounds: &[RoundRow], agents: &[String], scenario: &str) -> Vec<SummaryRow> {
    agents
        .iter()
        .map(|a| {
            let finals = final_regrets(rounds, a);
            let (mean, sd) = mean_sd(&finals);
            SummaryRow {
                agent: a.clone(),
                scenario: scenario.to_string(),
                mean,
                sd,
                replications: finals.len(),
            }
        })
        .collect()
}

enum Source {
    Synthetic(crate::env::SyntheticSpec),
    Dataset(Arc<TabularData>),
}

impl Source {
    fn load(config: &ExperimentConfig) -> Result<Self> {
        Ok(match &config.dataset {
            Some(d) => Source::Dataset(Arc::new(TabularData::from_csv(&d.csv, &d.label, &d.options())?)),
            None => Source::Synthetic(config.synthetic_spec()?),
        })
    }

    fn environment(&self, rep_seed: u64) -> Result<Box<dyn BanditEnvironment>> {
        Ok(match self {
            Source::Synthetic(spec) => Box::new(SyntheticEnv::new(*spec, derive(rep_seed, 0))?),
            Source::Dataset(data) => Box::new(ClassificationBanditEnv::new(data.clone(), derive(rep_seed, 0))),
        })
    }
}

/// Seed of replication `rep`.
pub fn replication_seed(global_seed: u64, rep: usize) -> u64 {
    derive(global_seed, rep as u64)
}

fn hash_contexts<'a>(contexts: impl Iterator<Item = &'a Vec<f64>>) -> u64 {
    let mut bytes = Vec::new();
    for x in contexts {
        for v in x {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    fnv1a(&bytes)
}

/// Runs every agent of the config against one replication's stream.
pub fn run_replication(config: &ExperimentConfig, env: &dyn BanditEnvironment, rep: usize) -> Result<ReplicationOutput> {
    let rep_seed = replication_seed(config.global_seed, rep);
    let stream: InteractionStream = env.materialize(config.horizon, derive(rep_seed, 1))?;
    let (k, p) = (env.n_arms(), env.dim());
    let probes = ProbeSet::new(config.global_seed, &config.scenario_label(), p, config.probes);
    let truth: Option<Vec<Vec<f64>>> = probes.contexts.iter().map(|x| env.mean_rewards(x)).collect();
    let mut out = ReplicationOutput::default();

    for (ai, name) in config.agents.iter().enumerate() {
        let mut agent = config.make_agent(name, k, p, derive(rep_seed, 2 + ai as u64))?;
        let start = Instant::now();
        let mut cum = 0.0;
        let mut last_refresh: Option<Snapshot> = None;
        let mut seen = Vec::with_capacity(stream.len());
        for i in 0..stream.len() {
            let t = i as u64 + 1;
            let x = &stream.contexts[i];
            seen.push(x);
            let a = agent.select(x)?;
            let reward = stream.rewards[i][a];
            let regret = stream.regret(i, a);
            agent.update(x, a, reward)?;
            cum += regret;
            out.rounds.push(RoundRow {
                replication: rep,
                t,
                agent: name.clone(),
                action: a,
                reward,
                regret,
                cum_regret: cum,
                cum_wall_time: if config.wall_time { start.elapsed().as_secs_f64() } else { 0.0 },
            });
            if let Some(forest) = agent.as_forest_mut() {
                let refreshed = forest.refreshes().last().is_some_and(|r| r.t == t);
                if refreshed && config.dump_forest {
                    for (m, pool) in forest.pools().iter().enumerate() {
                        if let Some(d) = pool.draws().last() {
                            out.forests.push((format!("rep{rep}_{name}_t{t}_model{m}.txt"), forest_to_string(&d.forest)));
                        }
                    }
                }
                if config.snapshots {
                    if refreshed {
                        last_refresh = Snapshot::capture(forest, &probes, truth.clone(), rep, SnapshotKind::Refresh, t);
                        out.snapshots.extend(last_refresh.clone());
                    }
                    if config.eval_rounds.contains(&t) {
                        if let Some(s) = &last_refresh {
                            out.snapshots.push(s.at_eval_round(t));
                        }
                    }
                }
            }
        }
        out.streams.push(StreamRow {
            replication: rep,
            agent: name.clone(),
            context_hash: format!("{:016x}", hash_contexts(seen.into_iter())),
        });
    }
    Ok(out)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs all replications (in parallel) and returns the collected artifact
/// without touching the file system.
pub fn run_in_memory(config: &ExperimentConfig) -> Result<RunArtifact> {
    execute(config, None)
}

/// Runs the experiment and writes `rounds.csv`, `summary.csv`,
/// `streams.csv`, `config.toml` and, for forest agents, `snapshots.jsonl`
/// plus the diagnostics tables into `config.out_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifact> {
    execute(config, Some(&config.out_dir))
}

fn execute(config: &ExperimentConfig, dir: Option<&Path>) -> Result<RunArtifact> {
    config.validate()?;
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let source = Source::load(config)?;
    let outputs: Vec<ReplicationOutput> = thread_pool()?.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|rep| {
                let env = source.environment(replication_seed(config.global_seed, rep))?;
                let out = run_replication(config, env.as_ref(), rep)?;
                if let (Some(dir), true) = (dir, config.dump_forest) {
                    let fdir = dir.join("forests");
                    fs::create_dir_all(&fdir).map_err(|e| Error::io(&fdir, e))?;
                    for (name, text) in &out.forests {
                        let path = fdir.join(name);
                        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut art = RunArtifact::default();
    for o in outputs {
        art.rounds.extend(o.rounds);
        art.streams.extend(o.streams);
        art.snapshots.extend(o.snapshots);
    }
    art.summary = summarize(&art.rounds, &config.agents, &config.scenario_label());
    if let Some(dir) = dir {
        write_artifacts(dir, config, &art)?;
    }
    if !art.snapshots.is_empty() {
        let tables = DiagnosticTables::from_snapshots(&art.snapshots)?;
        if let Some(dir) = dir {
            tables.write(dir)?;
        }
        art.diagnostics = Some(tables);
    }
    Ok(art)
}

fn write_artifacts(dir: &Path, config: &ExperimentConfig, art: &RunArtifact) -> Result<()> {
    write_table(&dir.join("rounds.csv"), "rounds", &art.rounds)?;
    write_table(&dir.join("summary.csv"), "summary", &art.summary)?;
    write_table(&dir.join("streams.csv"), "streams", &art.streams)?;
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, config.to_toml_string()).map_err(|e| Error::io(&cfg_path, e))?;
    if !art.snapshots.is_empty() {
        let mut text = String::new();
        for s in &art.snapshots {
            text.push_str(&serde_json::to_string(s).map_err(|e| Error::Format(e.to_string()))?);
            text.push('\n');
        }
        let path = dir.join(SNAPSHOT_FILE);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
