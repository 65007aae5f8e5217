use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {value} is outside the domain of {function}: {reason}")]
    Domain {
        function: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("history evaluated at t = {t}, outside its domain [{start}, {end}]")]
    HistoryDomain { t: f64, start: f64, end: f64 },

    #[error("step {step} exceeds a quarter of the smallest lag {min_lag}")]
    StepTooLarge { step: f64, min_lag: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("cross-check disagreement: {0}")]
    CrossCheck(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
