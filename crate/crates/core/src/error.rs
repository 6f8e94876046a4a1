use thiserror::Error;

/// Errors produced by the model, solvers and analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WnvError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("state left the invariant box at t = {t} (excess {excess:e}); time step too large")]
    BoxViolation { t: f64, excess: f64 },

    #[error("step at t = {t} failed after {halvings} halvings (last dt = {dt:e}): {reason}")]
    StepFailure {
        t: f64,
        dt: f64,
        halvings: u32,
        reason: String,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("could not bracket a root of {0}")]
    BracketFailure(&'static str),

    #[error("no traveling front: R0 = {r0} <= 1")]
    NoTravelingFront { r0: f64 },
}

pub type Result<T> = std::result::Result<T, WnvError>;
