use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Non-finite input or a vector of the wrong dimension.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation requested outside the landscape's declared validity region.
    #[error("point at distance {distance} lies outside the validity radius {radius}")]
    Region { distance: f64, radius: f64 },

    /// Invalid parameter value.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Condition not applicable to this minima set or landscape.
    #[error("condition {kind} not applicable: {reason}")]
    Kind { kind: String, reason: String },

    /// Premise of a bound is violated (e.g. starting point outside the neighborhood).
    #[error("bound premise violated: {0}")]
    Premise(String),

    /// Gradient or iterate became non-finite during a run.
    #[error("non-finite iterate at step {step}: {detail}")]
    NonFinite { step: usize, detail: String },

    /// Monte Carlo refused to produce an estimate.
    #[error("estimate refused: {0}")]
    Refused(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
