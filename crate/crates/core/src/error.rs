use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate uniform input {0}: must lie strictly inside (0, 1)")]
    DegenerateUniform(f64),

    #[error("non-positive rate {rate} at site {site}")]
    NonPositiveRate { site: i64, rate: f64 },

    #[error("time {requested} lies beyond the simulated horizon {horizon}")]
    BeyondHorizon { requested: f64, horizon: f64 },

    #[error("grid truncation: {0}")]
    Truncation(String),

    #[error("missing occupation snapshot for time {0}")]
    MissingSnapshot(f64),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
