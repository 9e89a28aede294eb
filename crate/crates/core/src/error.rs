use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("marginal covariance is singular at step {step} (phase {phase:.4})")]
    SingularMarginal { step: usize, phase: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("simulation diverged: {0}")]
    Simulation(String),

    #[error("episode already finished; call reset first")]
    EpisodeDone,

    #[error("config field `{field}`: {constraint}")]
    Config { field: String, constraint: String },

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Config { field: field.into(), constraint: constraint.into() }
    }

    pub fn file(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::File { path: path.into(), message: message.into() }
    }

    /// True for errors caused by bad user configuration or input files rather
    /// than numerical failures at run time.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::File { .. }
                | Error::InvalidInput(_)
                | Error::Empty(_)
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
