use thiserror::Error;

/// Errors raised by the simulation and analytics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time {t} is outside the schedule span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid angle trace: {0}")]
    InvalidTrace(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("non-finite value encountered in {0}")]
    NumericFault(&'static str),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("grid mismatch: expected {expected} cells, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("analytic transport requires proportional controls; segment [{start}, {end}] is not")]
    NotProportional { start: f64, end: f64 },

    #[error("basis change requires equal mixing angle theta or storage (theta = pi/2); got {theta0} and {theta1}")]
    ThetaMismatch { theta0: f64, theta1: f64 },

    #[error("no stage labelled `{0}`")]
    UnknownStage(String),

    #[error("wave packet is not normalized (norm^2 = {0})")]
    Unnormalized(f64),

    #[error("overlap magnitude {0} exceeds 1")]
    OverlapTooLarge(f64),

    #[error("empty scan range")]
    EmptyRange,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
