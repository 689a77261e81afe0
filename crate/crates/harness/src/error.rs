use thiserror::Error;

/// Errors raised while building, running or verifying matches.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] marlkit_core::Error),
    #[error("unknown {kind} {name:?}")]
    Registry { kind: &'static str, name: String },
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("bad usage: {0}")]
    Usage(String),
    #[error("malformed replay at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("agent entry {entry} ({name}): {source}")]
    Agent {
        entry: usize,
        name: String,
        source: marlkit_core::Error,
    },
    #[error("environment did not report a winner on its final step")]
    NoWinner,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn config(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}
