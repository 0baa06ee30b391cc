use thiserror::Error;

/// Errors raised by the engine. Validation *reports* (see
/// [`crate::types::ValidationReport`]) are not errors; these are failures
/// that stop an operation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("separation infeasible: could not place {k} types {epsilon}-apart after {attempts} rejections")]
    SeparationInfeasible { k: usize, epsilon: f64, attempts: usize },

    #[error("zero evidence: every prior-weighted likelihood is zero")]
    ZeroEvidence,

    #[error("absolute continuity violated at index {index}")]
    AbsoluteContinuity { index: usize },

    #[error("non-positive likelihood for response {response}")]
    NonPositiveLikelihood { response: usize },

    #[error("type set is not sorted by ascending alpha_E (position {position})")]
    UnsortedTypes { position: usize },

    #[error("replicator step too large: share {index} would become {value}")]
    StepTooLarge { index: usize, value: f64 },

    #[error("missing scale `{0}`")]
    MissingScale(String),

    #[error("restriction composition violated for {outer} -> {mid} -> {inner}: residual {residual:e}")]
    RestrictionComposition {
        outer: String,
        mid: String,
        inner: String,
        residual: f64,
    },

    #[error("history has {len} records, window needs {window}")]
    ShortHistory { len: usize, window: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
