//! Error type shared across the crate.

/// Errors produced by estimators, models, simulators and the harness.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A constructor or operation argument is outside its allowed range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A data sample or input record is unusable (non-finite, malformed).
    #[error("invalid input: {0}")]
    Input(String),
    /// The operation is not defined for the current state (e.g. no samples yet).
    #[error("invalid state: {0}")]
    State(String),
    /// Model parameters violate the model's domain (e.g. nonstationary AR).
    #[error("domain error: {0}")]
    Domain(String),
    /// A numeric evaluation failed (non-positive spectrum, non-finite gradient).
    #[error("evaluation error: {0}")]
    Eval(String),
}

pub type Result<T> = std::result::Result<T, Error>;
