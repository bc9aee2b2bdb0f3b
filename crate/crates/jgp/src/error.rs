use thiserror::Error;

/// Errors produced by the library and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite: minimum pivot {min_pivot:.6e} at jitter {jitter:.6e}")]
    NotPositiveDefinite { min_pivot: f64, jitter: f64 },

    #[error("source label error: {0}")]
    Labels(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 data/io, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::NotPositiveDefinite { .. }
            | Error::Labels(_)
            | Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
