use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the tariff, scheduling and study layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter violates a model invariant.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// A configuration document failed validation. `path` is the JSON path of the offending value.
    #[error("config error at {path}: {reason}")]
    Config { path: String, reason: String },

    /// An input data file is malformed or inconsistent.
    #[error("data error in {source_name}{}: {reason}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Data {
        source_name: String,
        line: Option<u64>,
        reason: String,
    },

    /// A root finder failed to reach its tolerance.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse error category, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Solver,
    Io,
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn data(source_name: impl Into<String>, line: Option<u64>, reason: impl Into<String>) -> Self {
        Error::Data {
            source_name: source_name.into(),
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter { .. } | Error::Config { .. } | Error::Json(_) => ErrorKind::Config,
            Error::Data { .. } | Error::Csv(_) => ErrorKind::Data,
            Error::NoConvergence { .. } => ErrorKind::Solver,
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    /// Prefixes the field/path of parameter and config errors, e.g. `devices[2]` + `b`.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            Error::InvalidParameter { field, reason } => Error::Config {
                path: format!("{prefix}.{field}"),
                reason,
            },
            Error::Config { path, reason } => Error::Config {
                path: format!("{prefix}.{path}"),
                reason,
            },
            other => other,
        }
    }
}
