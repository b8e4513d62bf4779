use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the lab's numerical and experiment layers.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("allocation of {requested_bytes} bytes failed for a sieve up to {limit}")]
    Resource { limit: u64, requested_bytes: u64 },

    #[error("explicit sign assignment has no sign for prime {0}")]
    MissingSign(u64),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("zeta has a pole at s = 1")]
    Pole,

    #[error("divergent kernel: Re s = {re_s} must exceed alpha = {alpha}")]
    DivergentKernel { re_s: f64, alpha: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest: {0}")]
    Manifest(String),
}

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by violated preconditions (bad parameters),
    /// as opposed to I/O failures.
    pub fn is_domain(&self) -> bool {
        !matches!(
            self,
            LabError::Io { .. } | LabError::Parse { .. } | LabError::Manifest(_)
        )
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidArgument(msg.into())
}
