use thiserror::Error;

/// Errors raised by the simulation and analytic layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invariant violated: {0}")]
    ViolatedInvariant(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("attack does not match the pilot assignment: {0}")]
    AttackMismatch(String),

    #[error("coefficient record does not match the observation: {0}")]
    RegimeMismatch(String),

    #[error("degenerate estimate: user {user} has zero estimate power")]
    DegenerateEstimate { user: usize },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("empty search grid")]
    EmptyGrid,

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
