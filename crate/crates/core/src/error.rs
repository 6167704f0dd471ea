use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid dimension {0}: at least 2 levels are required")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range 1..={dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },

    #[error("state is not normalized: squared norm {0}")]
    NotNormalized(f64),

    #[error("malformed probability vector: {0}")]
    MalformedProbabilities(String),

    #[error("{name} = {value} is outside the domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid configuration key `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl SimError {
    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        SimError::InvalidConfig {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
