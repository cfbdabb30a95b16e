use thiserror::Error;

/// Errors produced by the simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid domain error: {0}")]
    GridDomain(String),

    #[error("steady state did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular cavity linear system (|det| = {magnitude:e})")]
    SingularLinearSystem { magnitude: f64 },

    #[error("steady state is not converged")]
    UnconvergedSteadyState,

    #[error("near-singular response denominator (|D| = {magnitude:e}); operating point sits on a stability boundary")]
    NearSingularDenominator { magnitude: f64 },

    #[error("transmission |t| = {magnitude:e} is zero; phase undefined")]
    ZeroTransmission { magnitude: f64 },

    #[error("time step {dt:e} exceeds limit {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("integration diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("refusing to verify a point that is not stable (margin {margin:e})")]
    RefusesUnstable { margin: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
