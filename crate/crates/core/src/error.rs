use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank mismatch: {0}")]
    RankMismatch(String),

    #[error("invalid multi-index: {0}")]
    InvalidIndex(String),

    #[error("contraction order {order} exceeds tensor rank {rank}")]
    ContractionTooDeep { order: usize, rank: usize },

    #[error("direction vector has zero length")]
    ZeroDirection,

    #[error("frequency |y| = {0:e} is below the singular threshold")]
    SingularFrequency(f64),

    #[error("not a line in TS^(n-1): {0}")]
    NotALine(String),

    #[error("moment of order {0} is not available")]
    MissingMoment(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step {step:e} is below the noise floor {floor:e} of the evaluator")]
    StepUnderflow { step: f64, floor: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("evaluation produced a non-finite value: {0}")]
    NonFinite(String),

    #[error("malformed input at `{key}`: {message}")]
    Parse { key: String, message: String },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            key: key.into(),
            message: message.into(),
        }
    }
}
