use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("degenerate case: {0}")]
    DegenerateCase(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("root finding failed: {0}")]
    RootFindingFailure(String),

    #[error("root {0} lies within 1e-9 of the imaginary axis")]
    MarginalRoot(String),

    #[error("repeated pole at {0}; only simple poles are supported")]
    RepeatedPole(String),

    #[error("grid resolution insufficient: {0}")]
    GridResolutionError(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("Monte Carlo budget exceeded: {0}")]
    McBudgetExceeded(String),

    #[error("filter did not reach steady state: {0}")]
    NonConvergence(String),

    #[error("Markov chain is reducible: {0}")]
    Reducible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}

/// Fails with `InvalidParameter` unless `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

/// Fails unless `value` is non-negative (and not NaN). `+inf` is admitted.
pub(crate) fn require_non_negative(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be >= 0, got {value}")))
    }
}
