use thiserror::Error;

/// Errors produced by the evequiv library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the support of a distribution.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter is non-finite or violates its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A sample statistic is undefined (e.g. zero sample variance).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A calibration root could not be bracketed or located.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// Quadrature or another numerical routine did not converge.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Every candidate decision has an infinite objective.
    #[error("ambiguous decision: {0}")]
    AmbiguousDecision(String),

    /// Input configuration or file content is malformed.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
