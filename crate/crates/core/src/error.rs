use thiserror::Error;

/// Failures of the analytic models and their numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// The finite-N closed form needs `N * mu > lambda + mu`; use the mean-field form instead.
    #[error("finite-N closed form is degenerate (N*mu = {n_mu}, lambda+mu = {rate_sum}); use the mean-field form")]
    DegenerateClosedForm { n_mu: f64, rate_sum: f64 },

    #[error("series not converged after {terms} terms (remaining tail bound {tail_bound:e})")]
    SeriesNotConverged { terms: usize, tail_bound: f64 },

    #[error("quadrature failed after {subdivisions} subdivisions (error estimate {error_estimate:e})")]
    QuadratureFailure { subdivisions: usize, error_estimate: f64 },

    #[error("model out of range: {0}")]
    ModelOutOfRange(String),

    #[error("target coverage {target} unreachable (searched k up to {max_k})")]
    TargetUnreachable { target: f64, max_k: usize },

    #[error("precision loss: {0}")]
    PrecisionLoss(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::InvalidParameters(msg.into())
}
