use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probabilities sum to {sum}, expected 1")]
    Normalization { sum: String },

    #[error("degenerate marginal: {0}")]
    DegenerateMarginal(String),

    #[error("invalid probability {value} at ({x}, {y})")]
    InvalidProbability { x: usize, y: usize, value: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("criterion {0} needs the observed test labels")]
    MissingLabels(String),

    #[error("criterion {0} needs a significance level")]
    MissingEpsilon(String),

    #[error("criterion {criterion} needs at least 2 labels, got {labels}")]
    TooFewLabels { criterion: String, labels: usize },

    #[error("significance level {0} is outside (0, 1)")]
    InvalidEpsilon(String),

    #[error("tau {0} is outside [0, 1]")]
    InvalidTau(String),

    #[error("need {needed} neighbours, only {available} available")]
    InsufficientNeighbors { needed: usize, available: usize },

    #[error("object has zero standard deviation")]
    ConstantObject,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{size} elements exceed the enumeration cap of {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("unknown example id `{0}`")]
    UnknownExampleId(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
