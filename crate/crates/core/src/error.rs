use thiserror::Error;

/// Errors raised by validation, analytics, simulation and estimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite parameter `{0}`")]
    NonFinite(&'static str),

    #[error("non-positive temperature `{name}` = {value}")]
    NonPositiveTemperature { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no stationary state: stiffness a = {a} does not exceed |g| = {g}")]
    NoStationaryState { a: f64, g: f64 },

    #[error("covariance is singular or not positive definite (determinant {det})")]
    SingularCovariance { det: f64 },

    #[error("witness requires equal bath temperatures (t1 = {t1}, t2 = {t2})")]
    UnequalTemperatures { t1: f64, t2: f64 },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("underdamped-oscillatory regime unsupported (4am/gamma^2 = {0} > 1)")]
    OscillatoryRegime(f64),

    #[error("probe increment {eps} is invalid: {reason}")]
    InvalidProbe { eps: f64, reason: String },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("no bin reached the minimum count of {min_count}")]
    EmptyField { min_count: usize },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
