use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate point at rows {first} and {second}")]
    DuplicatePoint { first: usize, second: usize },

    #[error("weight {weight} at row {row} is not strictly positive")]
    NonPositiveWeight { row: usize, weight: f64 },

    #[error("weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid diffusion: {0}")]
    InvalidDiffusion(String),

    #[error("missing divergence of m for a non-constant diffusion")]
    MissingDivergence,

    #[error("target has no log density")]
    MissingLogDensity,

    #[error("target has no exact sampler")]
    NoExactSampler,

    #[error("metric is not positive definite at state {state:?}")]
    NonSpdMetric { state: Vec<f64> },

    #[error("linear program solver failed: {0}")]
    Solver(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
