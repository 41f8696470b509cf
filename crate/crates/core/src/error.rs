use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("collision with the {body}: Hamiltonian is singular here")]
    Collision { body: &'static str },

    #[error("point excluded from the chart ({0})")]
    ChartExcluded(&'static str),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("state violates constraints by {violation:e}")]
    Constraint { violation: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("no section crossing within {steps} steps")]
    NoCrossing { steps: usize },

    #[error("root finding diverged after {iterations} iterations (residual {residual:e})")]
    Root { iterations: usize, residual: f64 },

    #[error("Newton shooting failed after {iterations} iterations (residual {residual:e})")]
    Shooting { iterations: usize, residual: f64 },

    #[error("continuation stopped early: {0}")]
    Continuation(String),

    #[error("trivial multiplier pair is {distance:e} away from 1")]
    Reduction { distance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
