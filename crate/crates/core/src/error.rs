use thiserror::Error;

/// Errors raised by the model, the evidence generators and the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("p-value must lie in (0, 1], got {0}")]
    InvalidPValue(f64),

    #[error("significance level must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("e-value must be finite and non-negative, got {0}")]
    InvalidEValue(f64),

    #[error("cannot parse `{token}`: {reason}")]
    Parse { token: String, reason: String },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("likelihood-ratio e-value overflowed for z = {z}, delta = {delta}")]
    EValueOverflow { z: f64, delta: f64 },

    #[error("generator produced a p-value of exactly 0")]
    ZeroPValue,

    #[error("observed alpha {alpha} is not covered by any conditional cell")]
    UncoveredAlpha { alpha: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
