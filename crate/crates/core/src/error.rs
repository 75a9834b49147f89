use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("matrix is not self-adjoint (deviation {deviation:.3e})")]
    NotSelfAdjoint { deviation: f64 },

    #[error("not a valid state: {0}")]
    NotAState(String),

    #[error("conditioning on a null event (probability {probability:.3e})")]
    NullEvent { probability: f64 },

    #[error("{0} is not an eigenvalue of the observable")]
    UnknownOutcome(f64),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("normalization factor collapsed to {0:.3e}; reduce the step size")]
    NormalizationCollapse(f64),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
