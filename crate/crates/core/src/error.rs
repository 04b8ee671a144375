use thiserror::Error;

/// Errors raised by density estimation, the AMI estimators and the tests built on them.
#[derive(Debug, Error)]
pub enum AmiError {
    #[error("empty data")]
    EmptyData,

    #[error("non-finite value at observation {index}")]
    NonFinite { index: usize },

    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("observation {index} lies outside the padded domain")]
    OutsideDomain { index: usize },

    #[error("query point outside the estimate's support")]
    OutsideSupport,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fixed-point iteration did not converge in {iterations} iterations (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },

    #[error("{permutations} permutations are too few for alpha = {alpha}; need at least {need}")]
    InsufficientPermutations {
        permutations: usize,
        alpha: f64,
        need: usize,
    },

    #[error("report has no variance components (no-split estimate)")]
    MissingVariances,

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AmiError>;
