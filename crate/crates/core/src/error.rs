use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: missing column `{name}`")]
    MissingColumn { path: String, name: String },
    #[error("{path}: row {row}: bad value in column `{column}`: {value:?}")]
    BadValue {
        path: String,
        row: usize,
        column: String,
        value: String,
    },
    #[error("{path}: duplicate key {key}")]
    DuplicateKey { path: String, key: String },
    #[error("{path}: trace contains no runs")]
    EmptyTrace { path: String },
    #[error("training trace spans several machines ({0}); expected only the local machine")]
    MixedMachines(String),

    #[error("benchmark profiles contain no row flagged local")]
    MissingLocal,
    #[error("machine {machine}: score `{field}` must be positive")]
    NonPositiveScore { machine: String, field: String },
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),

    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("task `{task}`: need at least 3 runs to fit a model, got {got}")]
    TooFewRuns { task: String, got: usize },
    #[error("runs mix tasks or machines: {0}")]
    MixedTasks(String),

    #[error("application benchmarks refer to different tasks (`{0}` vs `{1}`)")]
    TaskMismatch(String, String),
    #[error("no runtime factors available for machine `{0}`")]
    NoFactors(String),

    #[error("actual runtime must be positive")]
    ZeroActual,
    #[error("empty input")]
    EmptyInput,
    #[error("no actual runtime for task `{task}` on machine `{machine}`")]
    MissingActual { task: String, machine: String },

    #[error("no runtime estimate for task `{task}` on machine `{machine}`")]
    MissingEstimate { task: String, machine: String },
    #[error("workflow graph is invalid: {0}")]
    InvalidDag(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for mistakes in the invocation or config rather than in input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
