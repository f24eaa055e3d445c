use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// One or more points fall outside the grid domain. `indices` holds at most
    /// the first few offenders.
    #[error("{count} point(s) outside the domain, first offenders at {indices:?}")]
    OutOfDomain { count: usize, indices: Vec<usize> },

    #[error("coordinate {value} on axis {axis} outside [{lo}, {hi}]")]
    OutsideDomain {
        axis: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("negative density {value} at node {index:?}")]
    NegativeDensity { value: f64, index: Vec<usize> },

    #[error("node solve did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: &'static str },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
