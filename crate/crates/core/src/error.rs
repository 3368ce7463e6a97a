//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or matrix dimension does not match the problem size.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A matrix that must be symmetric is not.
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    /// A multiplier for an inequality constraint went negative.
    #[error("multiplier {index} is negative ({value}) for an inequality constraint")]
    NegativeMultiplier { index: usize, value: f64 },

    /// The problem is too large for an enumeration-based backend.
    #[error("{what} supports at most {max} variables, got {got}")]
    TooManyVariables {
        what: &'static str,
        max: usize,
        got: usize,
    },

    /// All constraint expectations match their bounds; no ascent direction.
    #[error("subgradient vanished: all constraint expectations equal their bounds")]
    SubgradientVanished,

    /// No exact backend can certify an optimum at this size.
    #[error("exact oracle unavailable for {n} variables")]
    OracleUnavailable { n: usize },

    /// A constraint form is outside what the operation supports.
    #[error("unsupported constraint: {0}")]
    UnsupportedConstraint(String),

    /// Invalid parameter value.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
