use thiserror::Error;

use crate::models::OracleError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rule size {0} is not allowed: trigonometric rules need an odd number of points")]
    EvenRule(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index set is not lower: {0}")]
    NotLower(String),

    #[error("missing sample for node {0:?}")]
    MissingSample(Vec<u32>),

    #[error("missing tensor coefficients for tensor {0:?} with nonzero combination coefficient")]
    MissingTensor(Vec<u32>),

    #[error("underdetermined anisotropy fit: {rows} usable rows, need at least {needed}")]
    Underdetermined { rows: usize, needed: usize },

    #[error("rank-deficient anisotropy fit: no usable frequency variation in dimension {dimension}")]
    RankDeficient { dimension: usize },

    #[error("budget of {budget} nodes is smaller than the initial grid of {initial} nodes")]
    BudgetExhaustedAtInit { budget: usize, initial: usize },

    #[error("grid file: {0}")]
    GridFile(String),

    #[error(transparent)]
    Oracle(#[from] OracleError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
