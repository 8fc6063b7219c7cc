//! Experiment orchestration: configuration, seeding, replications and
//! artifacts.

pub mod config;
pub mod ope;
pub mod runner;

pub use config::{BartSection, DatasetSection, ExperimentConfig, AGENT_NAMES};
pub use ope::{run_ope, OpeRequest};
pub use runner::{mean_sd, replication_seed, run_experiment, run_in_memory, RoundRow, RunArtifact, SummaryRow};
