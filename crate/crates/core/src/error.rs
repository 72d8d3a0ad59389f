use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown level {value:?} for hyperparameter {name:?}")]
    UnknownLevel { name: String, value: String },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("unknown dataset id {0}")]
    UnknownDataset(usize),

    #[error("action {action} out of range for a grid of {n_configs} configurations")]
    ActionOutOfRange { action: usize, n_configs: usize },

    #[error("cannot step a terminal state")]
    TerminalState,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("kernel matrix is not positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("budget {budget} exceeds grid size {n_configs}")]
    BudgetTooLarge { budget: usize, n_configs: usize },

    #[error("missing {what} ({})", path.display())]
    MissingFile { what: &'static str, path: PathBuf },

    #[error("schema mismatch in {file}: {detail}")]
    SchemaMismatch { file: String, detail: String },

    #[error("non-contiguous ids in {file}: {detail}")]
    NonContiguousIds { file: String, detail: String },

    #[error("incomplete response table: {0}")]
    IncompleteResponses(String),

    #[error("parse error in {file} at line {line}: {detail}")]
    Parse { file: String, line: usize, detail: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, detail: impl Into<String>) -> Self {
        Error::Parse { file: file.into(), line, detail: detail.into() }
    }
}
