use thiserror::Error;

/// Errors produced by channel construction and analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("particle index {index} out of range for {n} particles")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("eigensolver did not converge on a {0}x{0} matrix")]
    NoConvergence(usize),
    #[error("ket-bras carry different signatures and cannot be connected by a permutation")]
    NoConnection,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("window too small: {0}")]
    Truncation(String),
}

impl Error {
    /// True for errors caused by problem sizes rather than malformed input.
    pub fn is_feasibility(&self) -> bool {
        matches!(self, Error::Budget(_) | Error::Truncation(_))
    }

    /// True for numerical failures of an iterative solver.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
