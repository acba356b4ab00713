use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid rock/fluid model: {0}")]
    InvalidModel(String),

    #[error("field size mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("incompatible wells: net rate {net:e} (total {total:e})")]
    IncompatibleWells { net: f64, total: f64 },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-finite saturation produced by a time step")]
    NonFinite,

    #[error("micro-step limit of {limit} exceeded")]
    StepLimit { limit: usize },

    #[error("numerical failure at t = {time} days (last valid state): {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidGrid(_)
            | Error::InvalidModel(_)
            | Error::IncompatibleWells { .. } => 2,
            Error::NoConvergence { .. }
            | Error::NonFinite
            | Error::StepLimit { .. } => 3,
            Error::AtTime { source, .. } => source.exit_code(),
            Error::ShapeMismatch { .. } | Error::Snapshot { .. } | Error::Io { .. } => 1,
        }
    }
}
