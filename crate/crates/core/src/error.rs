use thiserror::Error;

/// Errors raised by the value model, environments, agents and interfaces.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("space mismatch{}: {msg}", slot.map(|s| format!(" at slot {s}")).unwrap_or_default())]
    SpaceMismatch { slot: Option<usize>, msg: String },
    #[error("setup error: {0}")]
    Setup(String),
    #[error("episode is over")]
    EpisodeOver,
    #[error("environment has not been reset")]
    NotReset,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed value: {0}")]
    Format(String),
}

impl Error {
    pub fn mismatch(msg: impl Into<String>) -> Self {
        Error::SpaceMismatch {
            slot: None,
            msg: msg.into(),
        }
    }

    pub fn mismatch_at(slot: usize, msg: impl Into<String>) -> Self {
        Error::SpaceMismatch {
            slot: Some(slot),
            msg: msg.into(),
        }
    }

    /// Attach a slot index to a `SpaceMismatch` that doesn't carry one yet.
    pub fn at_slot(self, slot: usize) -> Self {
        match self {
            Error::SpaceMismatch { slot: None, msg } => Error::SpaceMismatch {
                slot: Some(slot),
                msg,
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
