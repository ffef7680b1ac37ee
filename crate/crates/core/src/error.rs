use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition or invariant.
    #[error("{0}")]
    Domain(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("config: {path}: {message}")]
    Config { path: String, message: String },

    #[error("training data has a single class ({positives} positive, {negatives} negative)")]
    DegenerateLabels { positives: usize, negatives: usize },

    #[error("mission length {length:.1} m exceeds budget by {excess:.1} m")]
    OverBudget { length: f64, excess: f64 },

    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Stable machine-readable code, printed by the CLI on failure.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "E_DOMAIN",
            Error::Parse { .. } => "E_PARSE",
            Error::Config { .. } => "E_CONFIG",
            Error::DegenerateLabels { .. } => "E_LABELS",
            Error::OverBudget { .. } => "E_BUDGET",
            Error::MissingArtifact(_) => "E_MISSING",
            Error::Io(_) => "E_IO",
            Error::Json(_) => "E_JSON",
            Error::Csv(_) => "E_CSV",
        }
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OverBudget { .. } => 3,
            Error::Config { .. } | Error::Json(_) => 2,
            _ => 1,
        }
    }
}
