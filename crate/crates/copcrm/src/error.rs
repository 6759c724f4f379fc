//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrmError {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structured correlation matrix is singular at the requested order.
    #[error("singular correlation matrix (k = {k})")]
    SingularMatrix { k: usize },

    /// A matrix that must be positive definite is not.
    #[error("matrix not positive definite (k = {k})")]
    NotPositiveDefinite { k: usize },

    /// The base frequency puts all mass at zero, so no hurdle decomposition exists.
    #[error("degenerate frequency: P(N = 0) = 1")]
    DegenerateFrequency,

    /// The discrete CDF difference in the joint density underflowed to zero
    /// or below; the (n, y) pair is astronomically inconsistent with the
    /// parameters.
    #[error("non-positive joint mass at n = {n}")]
    NonPositiveMass { n: u32 },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed to converge to tolerance {tol}")]
    QuadratureNonConvergence { tol: f64 },

    /// The observed-information matrix could not be inverted; standard
    /// errors are reported absent rather than fabricated.
    #[error("singular Hessian: standard errors unavailable")]
    SingularHessian,

    /// An objective or derivative evaluation produced a non-finite value.
    #[error("non-finite evaluation")]
    NonFiniteEvaluation,

    /// A log-likelihood term evaluated to NaN; carries the offending policy.
    #[error("non-finite log-likelihood term for policy {policy_id}")]
    NonFinitePolicy { policy_id: String },
}

pub type Result<T> = std::result::Result<T, CrmError>;
