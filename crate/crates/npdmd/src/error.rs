use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("bad label: {0}")]
    BadLabel(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("label column: {0}")]
    LabelColumn(String),

    #[error("all samples share one class label")]
    SingleClass,

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("lambda {lambda} outside [0, {bound})")]
    LambdaOutOfRange { lambda: f64, bound: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is not positive definite")]
    SingularCovariance,

    #[error("zero vector where a direction is required")]
    ZeroVector,

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("empty hyperparameter grid")]
    EmptyGrid,
}
