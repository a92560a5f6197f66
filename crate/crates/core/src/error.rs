use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("numeric failure in {context}: achieved error estimate {achieved:e}")]
    Numeric { context: String, achieved: f64 },

    #[error("targeting failed: |P_n phi| = {score:e} after {iterations} iterations")]
    Targeting { score: f64, iterations: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("studentization failed: replicate {replicate} has zero standard error")]
    Studentization { replicate: usize },

    #[error("nuisance fit failed: {0}")]
    Fit(String),

    #[error("{failed} of {total} bootstrap replicates failed (limit 1%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Parse(_) => 2,
            Error::Degenerate(_) | Error::InsufficientData { .. } => 3,
            Error::Numeric { .. }
            | Error::Targeting { .. }
            | Error::Studentization { .. }
            | Error::TooManyFailures { .. }
            | Error::Fit(_) => 4,
            Error::Domain(_) | Error::Unsupported(_) => 2,
        }
    }
}
