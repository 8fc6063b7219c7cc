use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::snapshot::{Snapshot, SnapshotKind, ECE_LEVELS, INTERVAL_LEVEL};
use super::{covers, ece, inclusion_frontier, inclusion_from_counts, median, policy_delta_tv};
use crate::error::{Error, Result};
use crate::mcmc::{MoveCounters, MoveKind};

pub const SNAPSHOT_FILE: &str = "snapshots.jsonl";

/// First line of every CSV artifact.
pub fn schema_line(table: &str) -> String {
    format!("# schema: bandit-forest/{table}/v1")
}

/// Writes `rows` as CSV under a schema comment line.
pub fn write_table<T: Serialize>(path: &Path, table: &str, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", schema_line(table)).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageRow {
    pub agent: String,
    pub round: u64,
    pub coverage: f64,
    pub mean_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EceRow {
    pub agent: String,
    pub round: u64,
    pub ece: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhatRow {
    pub agent: String,
    pub round: u64,
    pub median: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcceptanceRow {
    pub agent: String,
    pub round: u64,
    pub move_kind: String,
    pub attempted: u64,
    pub accepted: u64,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyTvRow {
    pub agent: String,
    pub round: u64,
    pub mean_tv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InclusionRow {
    pub agent: String,
    pub round: u64,
    pub feature: usize,
    pub inclusion: f64,
    pub rank: usize,
    pub cumulative: f64,
}

/// Diagnostics aggregated over replications, keyed by agent and round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticTables {
    pub coverage: Vec<CoverageRow>,
    pub ece: Vec<EceRow>,
    pub rhat: Vec<RhatRow>,
    pub acceptance: Vec<AcceptanceRow>,
    pub policy_tv: Vec<PolicyTvRow>,
    pub feature_inclusion: Vec<InclusionRow>,
}

fn group<'a>(
    snaps: &'a [Snapshot],
    kind: SnapshotKind,
) -> BTreeMap<(String, u64), Vec<&'a Snapshot>> {
    let mut g: BTreeMap<(String, u64), Vec<&Snapshot>> = BTreeMap::new();
    for s in snaps.iter().filter(|s| s.kind == kind) {
        g.entry((s.agent.clone(), s.round)).or_default().push(s);
    }
    g
}

impl DiagnosticTables {
    /// Coverage, ECE and feature inclusion come from evaluation-round
    /// snapshots; R-hat, acceptance and policy change from refresh snapshots.
    /// Coverage and ECE average uniformly over replications, probes and arms.
    pub fn from_snapshots(snaps: &[Snapshot]) -> Result<Self> {
        let mut t = DiagnosticTables::default();
        for ((agent, round), group) in group(snaps, SnapshotKind::Eval) {
            let with_truth: Vec<&&Snapshot> = group.iter().filter(|s| s.truth.is_some()).collect();
            if !with_truth.is_empty() {
                let mut hits = vec![0usize; ECE_LEVELS.len() + 1];
                let mut total = 0usize;
                let mut length = 0.0;
                for s in &with_truth {
                    let truth = s.truth.as_ref().unwrap();
                    let li = s.level_index(INTERVAL_LEVEL).ok_or_else(|| Error::Format("snapshot lacks 0.95 level".into()))?;
                    for (probe, tr) in s.intervals.iter().zip(truth) {
                        for (arm, &f0) in probe.iter().zip(tr) {
                            total += 1;
                            length += arm[li].1 - arm[li].0;
                            for (h, &iv) in hits.iter_mut().zip(arm) {
                                *h += covers(iv, f0) as usize;
                            }
                        }
                    }
                }
                let n = total as f64;
                let levels = &with_truth[0].levels;
                let li = with_truth[0].level_index(INTERVAL_LEVEL).unwrap();
                t.coverage.push(CoverageRow {
                    agent: agent.clone(),
                    round,
                    coverage: hits[li] as f64 / n,
                    mean_length: length / n,
                });
                let (ls, cs): (Vec<f64>, Vec<f64>) = levels
                    .iter()
                    .zip(&hits)
                    .filter(|(l, _)| ECE_LEVELS.iter().any(|e| (*e - **l).abs() < 1e-12))
                    .map(|(l, h)| (*l, *h as f64 / n))
                    .unzip();
                t.ece.push(EceRow {
                    agent: agent.clone(),
                    round,
                    ece: ece(&ls, &cs),
                });
            }
            let p = group[0].split_counts.len();
            let mut counts = vec![0u64; p];
            for s in &group {
                for (c, v) in counts.iter_mut().zip(&s.split_counts) {
                    *c += v;
                }
            }
            let inc = inclusion_from_counts(&counts);
            for (rank, (feature, cumulative)) in inclusion_frontier(&inc).into_iter().enumerate() {
                t.feature_inclusion.push(InclusionRow {
                    agent: agent.clone(),
                    round,
                    feature,
                    inclusion: inc[feature],
                    rank: rank + 1,
                    cumulative,
                });
            }
        }

        for ((agent, round), group) in group(snaps, SnapshotKind::Refresh) {
            let values: Vec<f64> = group.iter().flat_map(|s| s.rhat.iter().copied()).collect();
            if !values.is_empty() {
                t.rhat.push(RhatRow {
                    agent: agent.clone(),
                    round,
                    median: median(&values),
                    mean: values.iter().sum::<f64>() / values.len() as f64,
                });
            }
            let mut total = MoveCounters::default();
            for s in &group {
                total.add(&s.counters);
            }
            for kind in MoveKind::ALL {
                let i = kind.index();
                t.acceptance.push(AcceptanceRow {
                    agent: agent.clone(),
                    round,
                    move_kind: kind.name().into(),
                    attempted: total.attempted[i],
                    accepted: total.accepted[i],
                    rate: total.rate(kind).unwrap_or(f64::NAN),
                });
            }
            t.acceptance.push(AcceptanceRow {
                agent: agent.clone(),
                round,
                move_kind: "overall".into(),
                attempted: total.attempted.iter().sum(),
                accepted: total.accepted.iter().sum(),
                rate: total.overall_rate().unwrap_or(f64::NAN),
            });
        }

        // Policy change between consecutive refresh snapshots of one run.
        let mut runs: BTreeMap<(String, usize), Vec<&Snapshot>> = BTreeMap::new();
        for s in snaps.iter().filter(|s| s.kind == SnapshotKind::Refresh) {
            runs.entry((s.agent.clone(), s.replication)).or_default().push(s);
        }
        let mut tv: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
        for ((agent, _), mut seq) in runs {
            seq.sort_by_key(|s| s.round);
            for pair in seq.windows(2) {
                let mut per_probe = Vec::with_capacity(pair[1].votes.len());
                for (now, prev) in pair[1].votes.iter().zip(&pair[0].votes) {
                    per_probe.push(policy_delta_tv(now, prev)?);
                }
                let mean = per_probe.iter().sum::<f64>() / per_probe.len() as f64;
                tv.entry((agent.clone(), pair[1].round)).or_default().push(mean);
            }
        }
        for ((agent, round), v) in tv {
            t.policy_tv.push(PolicyTvRow {
                agent,
                round,
                mean_tv: v.iter().sum::<f64>() / v.len() as f64,
            });
        }
        Ok(t)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_table(&dir.join("coverage_length.csv"), "coverage_length", &self.coverage)?;
        write_table(&dir.join("ece.csv"), "ece", &self.ece)?;
        write_table(&dir.join("rhat.csv"), "rhat", &self.rhat)?;
        write_table(&dir.join("acceptance.csv"), "acceptance", &self.acceptance)?;
        write_table(&dir.join("policy_tv.csv"), "policy_tv", &self.policy_tv)?;
        write_table(&dir.join("feature_inclusion.csv"), "feature_inclusion", &self.feature_inclusion)?;
        Ok(())
    }
}

pub fn read_snapshots(path: &Path) -> Result<Vec<Snapshot>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row: i + 1,
            column: String::new(),
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Recomputes every diagnostics table of a run directory from its stored
/// snapshots and writes the CSVs next to them.
pub fn diagnose_run(dir: &Path) -> Result<DiagnosticTables> {
    let snaps = read_snapshots(&dir.join(SNAPSHOT_FILE))?;
    let tables = DiagnosticTables::from_snapshots(&snaps)?;
    tables.write(dir)?;
    Ok(tables)
}
