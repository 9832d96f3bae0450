use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual_norm:.3e})")]
    NonConvergence { iterations: usize, residual_norm: f64 },

    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),

    #[error("function evaluation failed: {0}")]
    EvaluationFailure(String),

    #[error("unsupported derivative order {order} (maximum is {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need at least {needed} trajectory points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("horizon {horizon} is not an integer multiple of step {step}")]
    BadDiscretization { horizon: f64, step: f64 },

    #[error("boundary point lies inside the obstacle (clearance {clearance:.3e})")]
    StartInsideObstacle { clearance: f64 },

    #[error("trajectory entered the obstacle at step {step} (clearance {clearance:.3e})")]
    ObstaclePenetration { step: usize, clearance: f64 },

    #[error("trajectory reached the potential singularity at step {step} (clearance {clearance:.3e})")]
    SingularPotential { step: usize, clearance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
