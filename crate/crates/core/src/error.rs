use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    #[error("input contains non-finite values: {0}")]
    NonFinite(String),

    #[error("numerically rank deficient: {0}")]
    RankDeficient(String),

    #[error("matrix is not positive semidefinite within tolerance")]
    NotPsd,

    #[error(
        "solver did not reach gap {tol:.3e} within {max_iter} iterations \
         (best objective {objective:.6e}, final gap {gap:.3e})"
    )]
    NoConvergence {
        tol: f64,
        max_iter: usize,
        objective: f64,
        gap: f64,
        /// Best iterate found before giving up.
        best: Vec<f64>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
