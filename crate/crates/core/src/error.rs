use thiserror::Error;

/// Errors raised by the clustering pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QtcError {
    /// Malformed or non-finite input data.
    #[error("invalid input: {0}")]
    Input(String),
    /// A parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// The data admits no meaningful answer (all points coincide, zero gap, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A node with zero degree; the symmetric normalization is undefined.
    #[error("node {node} is isolated (zero degree)")]
    IsolatedNode { node: usize },
    /// A cluster block whose ground state is not single-signed.
    #[error("cluster {cluster} has a mixed-sign block ground state (min entry {min_entry:e})")]
    InvalidBlock { cluster: usize, min_entry: f64 },
    /// Numerical failure (non-convergence, singular system).
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// Two independent routes to the same answer disagreed.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl QtcError {
    /// True for failures caused by floating-point computation rather than by the caller.
    pub fn is_numeric(&self) -> bool {
        matches!(self, QtcError::Numeric(_) | QtcError::Consistency(_))
    }
}

impl From<std::io::Error> for QtcError {
    fn from(err: std::io::Error) -> Self {
        QtcError::Io(err.to_string())
    }
}

impl From<csv::Error> for QtcError {
    fn from(err: csv::Error) -> Self {
        QtcError::Input(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QtcError>;
