use std::path::PathBuf;

/// Errors produced by the search toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid input: {0}")]
    Input(String),

    /// An exhaustive routine refused to run because its size cap was exceeded.
    #[error("refused: {0}")]
    Refused(String),

    #[error("evaluator protocol error: {message} (raw: {raw:?})")]
    Protocol { message: String, raw: String },

    #[error("evaluator timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("evaluator failed: {0}")]
    Evaluator(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
