use thiserror::Error;

/// Errors raised by the metamorphosis engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("representation mismatch: {0}")]
    Representation(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("expected {expected} noise increments, got {got}")]
    NoiseCount { expected: usize, got: usize },
    #[error("non-finite state at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },
    #[error("insufficient samples: need at least {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },
    #[error("invalid refinement: {0}")]
    Refinement(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
