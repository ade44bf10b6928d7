use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by constructors and numerical routines.
///
/// Property violations found by the sampling validators are *not* errors;
/// they are returned as report content.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain")]
    DomainViolation { point: Vec<f64> },

    #[error("conjugate search left the ball of radius {radius:e} after {doublings} doublings")]
    SearchRadiusExhausted { radius: f64, doublings: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported domain `{0}` (expected interval or rectangle)")]
    UnsupportedDomain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite integrand value at quadrature point {index}")]
    NonfiniteIntegrand { index: usize },

    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged {
        best: Vec<f64>,
        residual: f64,
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("construction failed: {0}")]
    ConstructionFailure(String),

    #[error("singular linear system")]
    SingularMatrix,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
