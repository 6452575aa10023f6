use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid task spec: {0}")]
    InvalidTask(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("goal {goal} is unreachable from ({x:.3}, {y:.3})")]
    UnreachableGoal { goal: usize, x: f64, y: f64 },

    #[error("demonstrator failed on {failed} of {attempts} episodes")]
    DemonstratorFailure { failed: usize, attempts: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite loss at step {step}")]
    NonFinite { step: usize },

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("enumeration infeasible: {0}")]
    Infeasible(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
