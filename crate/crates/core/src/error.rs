use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("repository {path}: {reason}")]
    Repository { path: PathBuf, reason: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty series")]
    EmptySeries,

    #[error("series too short: need at least {needed} values, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("boundary {name} ({date}) is outside the series range")]
    BoundaryOutOfRange { name: &'static str, date: String },

    #[error("empty segment: {0}")]
    EmptySegment(&'static str),

    #[error("unstable fit: {0}")]
    UnstableFit(String),

    #[error("optimizer did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("no usable candidate in grid: {0}")]
    DegenerateGrid(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{} not found", .0.display())]
    MissingInput(PathBuf),

    #[error("no models matched")]
    NoModels,

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
