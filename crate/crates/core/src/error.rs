use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A profile used as a domain map is not bounded away from zero.
    #[error("domain error: profile minimum {min:.3e} below guard {guard:.3e}")]
    Domain { min: f64, guard: f64 },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("contract error: {0}")]
    Contract(String),

    #[error("step failure at s = {s}: {reason}")]
    StepFailure { s: f64, reason: String },

    #[error("parse error in {path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid branch file {path}: {field}: {message}")]
    Schema {
        path: PathBuf,
        field: String,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable tag used by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Domain { .. } => "domain",
            Error::Dimension(_) => "dimension",
            Error::Contract(_) => "contract",
            Error::StepFailure { .. } => "step-failure",
            Error::Parse { .. } => "parse",
            Error::Schema { .. } => "schema",
            Error::Io { .. } => "io",
        }
    }
}
