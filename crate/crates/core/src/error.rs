use thiserror::Error;

use crate::solver::DiscSolution;

/// Errors raised anywhere in the disc pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {0}")]
    Resource(String),

    /// The real structure handed to `a_from_j` does not produce an anti-linear operator.
    #[error("inconsistent structure: {0}")]
    InconsistentStructure(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("inner contraction failed (ratio {ratio:.4} for {steps} consecutive steps); try a smaller p or a smaller amplitude")]
    ContractionFailure { ratio: f64, steps: usize },

    #[error(
        "outer iteration did not converge after {iterations} steps (last change {last_change:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        last_change: f64,
        best: Box<DiscSolution>,
    },

    #[error("outer iteration diverged: sup norm {sup_norm:.3e} exceeds guard {guard:.3e}")]
    Divergence { sup_norm: f64, guard: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("indeterminate: {0}")]
    Indeterminate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
