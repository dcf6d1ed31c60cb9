use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("empty kernel window at x = {x} (bandwidth {h})")]
    EmptyWindow { x: f64, h: f64 },
    #[error("threshold {t} too high: level set is empty")]
    ThresholdTooHigh { t: f64 },
    #[error("under-resolved level set: found {found} intervals, need {needed}")]
    UnderResolution { found: usize, needed: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate component {index}: cell carries no mass")]
    DegenerateComponent { index: usize },
    #[error("grid search over {k} components exceeds the budget; use coordinate-descent mode")]
    CombinatorialBudget { k: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
