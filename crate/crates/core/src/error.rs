use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no data")]
    NoData,

    #[error("refresh never ran")]
    PoolMissing,

    #[error("positivity violation: logged action {action} has zero behavior propensity at row {row}")]
    PositivityViolation { row: usize, action: usize },

    #[error("all importance weights are zero")]
    ZeroWeights,

    #[error("distribution does not sum to one (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("cluster bootstrap needs at least two clusters, found {0}")]
    TooFewClusters(usize),

    #[error("environment exhausted at round {0}")]
    Exhausted(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: row {row}, column '{column}': {msg}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        msg: String,
    },

    #[error("{0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (configs, files) rather than runtime failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse { .. } | Error::Format(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
