use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spring {index} has negative elastic limit {value}")]
    NegativeComponent { index: usize, value: f64 },

    #[error("spring {index} has non-finite elastic limit")]
    NonFinite { index: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("node-potential system is numerically singular although the terminals are connected")]
    SingularSystem,

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("threshold detection needs two non-empty classes ({0})")]
    NeedTwoClasses(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
