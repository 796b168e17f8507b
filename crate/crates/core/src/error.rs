use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HumError {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("need at least two outcome categories, found {0}")]
    FewerThanTwoCategories(usize),
    #[error("category {0} has no observations")]
    EmptyCategory(usize),
    #[error("row {row}: cannot parse `{value}` in column `{column}` as a number")]
    UnparseableNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-finite value in input: {0}")]
    NonFiniteInput(String),
    #[error("brute-force enumeration of {0} tuples exceeds the 1e7 guard")]
    InstanceTooLarge(u128),
    #[error("tuple count overflows 128-bit arithmetic")]
    CountOverflow,
    #[error("empty input")]
    EmptyInput,
    #[error("smoothing parameter must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("objective returned a non-finite value at {point:?}")]
    NonFiniteObjective { point: Vec<f64> },
    #[error("method requires a smooth objective")]
    SmoothObjectiveRequired,
    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("method requires exactly {expected} categories, data has {actual}")]
    WrongCategoryCount { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bootstrap unstable: {failed} of {total} replicates failed")]
    BootstrapUnstable { failed: usize, total: usize },
    #[error("study aborted: {failed} of {total} fits failed for {method}")]
    StudyUnstable {
        method: String,
        failed: usize,
        total: usize,
    },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("csv error: {0}")]
    Csv(String),
}

impl From<std::io::Error> for HumError {
    fn from(err: std::io::Error) -> Self {
        HumError::Io(err.to_string())
    }
}

impl From<csv::Error> for HumError {
    fn from(err: csv::Error) -> Self {
        HumError::Csv(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HumError>;
