use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} needs {needed} elements, over the memory cap of {cap}")]
    MemoryCap {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("matrix A^T A is singular and ridge fallback is disabled")]
    Singular,

    #[error("non-finite model value after epoch {epoch} (step size too large?)")]
    NonFinite { epoch: usize },

    #[error("worker panicked during epoch {epoch}")]
    WorkerPanic { epoch: usize },

    #[error("timer resolution too coarse: trial took {elapsed_ns} ns, increase trial size")]
    TimerResolution { elapsed_ns: u128 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// True for failures caused by the numerics of a run rather than by its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::Singular)
    }
}
