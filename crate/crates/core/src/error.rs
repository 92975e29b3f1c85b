use thiserror::Error;

/// Errors raised by the smoother library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The dual supremum defining the penalty is `+inf` at the requested point.
    #[error("penalty is unbounded (+inf) at the requested point")]
    UnboundedPenalty,

    #[error("cone generator enumeration exceeds the bound of {limit}")]
    TooComplex { limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A penalty fails the finiteness condition `Null(M) ∩ U^∞ = {0}`.
    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    /// A per-step `T = M + A D Aᵀ` block could not be factorized.
    #[error("degenerate penalty: {which} T-block at step {step} is not positive definite")]
    DegeneratePenalty { which: &'static str, step: usize },

    #[error("matrix is not symmetric positive definite (block {block})")]
    NotSpd { block: usize },

    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
