use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KellyError {
    /// An argument violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The model has no finite-atom representation.
    #[error("continuous model {0} has no discrete form; draw samples with gaussian_samples instead")]
    ContinuousModel(String),

    /// Gradient requested at or beyond the survival boundary `1 + k.x <= 0`.
    #[error("boundary: 1 + k.x = {margin} <= 0 at atom {atom}")]
    Boundary { atom: usize, margin: f64 },

    /// A wealth multiplier went negative.
    #[error("survival violated at step {step}: wealth multiplier {multiplier} < 0")]
    SurvivalViolated { step: usize, multiplier: f64 },

    #[error("unbounded boundary: radius {radius} must exceed |x0| = {center_norm}")]
    UnboundedBoundary { radius: f64, center_norm: f64 },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl KellyError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        KellyError::Domain(msg.into())
    }
}

impl From<std::io::Error> for KellyError {
    fn from(e: std::io::Error) -> Self {
        KellyError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, KellyError>;
