use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge after {levels} dyadic levels (last error estimate {estimate:.3e})")]
    NonConvergence { levels: usize, estimate: f64 },

    #[error("integral diverges near {point} (panel contributions stopped decaying)")]
    Divergence { point: f64 },

    #[error("circulant embedding has a negative eigenvalue {min_eig:.3e} (relative {relative:.3e}) at size {size}")]
    NegativeEmbedding {
        min_eig: f64,
        relative: f64,
        size: usize,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("size {n} exceeds the dense cap {cap}")]
    SizeOverCap { n: usize, cap: usize },

    #[error("covariance matrix is not positive semidefinite (smallest eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("requested tolerance {tol:.3e} is not reachable: {reason}")]
    ToleranceUnreachable { tol: f64, reason: String },

    #[error("rate fit needs at least 4 points, got {0}")]
    TooFewPoints(usize),

    #[error("rate fit needs positive values, got {value} at index {index}")]
    NonPositive { index: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error comes from a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Divergence { .. }
                | Error::NegativeEmbedding { .. }
                | Error::NotPsd { .. }
                | Error::ToleranceUnreachable { .. }
        )
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
