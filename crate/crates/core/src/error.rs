use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, counts or values a caller should not have passed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A value outside the domain of a closed-form expression, or a matrix that
    /// is not Hermitian positive definite where one is required.
    #[error("domain error: {0}")]
    Domain(String),

    /// A combiner whose noise covariance cannot be inverted.
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    /// Experiment configuration rejected before any work is done.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("solver failed at iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by user-supplied configuration rather than
    /// something going wrong at runtime.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidInput(_))
    }
}
