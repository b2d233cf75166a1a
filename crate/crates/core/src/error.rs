use thiserror::Error;

/// Errors produced by the regression toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of bounds for dimension {dim} of size {size}")]
    OutOfBounds { index: usize, dim: usize, size: usize },

    #[error("tensor with {0} entries exceeds the densification limit")]
    TooLarge(usize),

    #[error("feature map domain error at row {row}: {msg}")]
    Domain { row: usize, msg: String },

    #[error("degenerate scale on input column {0} (max == min)")]
    DegenerateScale(usize),

    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("matrix pair is rank deficient; stacked rank {rank} < {cols}")]
    SingularPair { rank: usize, cols: usize },

    #[error("underdetermined core problem: {rows} samples for {cols} unknowns")]
    Underdetermined { rows: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("{0}")]
    Data(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
