use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown fridge {0:?}")]
    UnknownFridge(String),
    #[error("no route for {0}")]
    NoRoute(String),
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("position {position} out of range (fridge has {count} positions)")]
    PositionOutOfRange { position: usize, count: usize },
    #[error("position {0} is empty")]
    PositionEmpty(usize),
    #[error("simulation is not enabled on this server")]
    SimDisabled,
    #[error("{0}")]
    SimCommand(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt log {path}: {message}")]
    CorruptLog { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl ServiceError {
    /// Stable machine-readable code for the `error` field of responses.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownFridge(_) | ServiceError::NoRoute(_) => "not_found",
            ServiceError::InvalidEvent(_) => "invalid_event",
            ServiceError::PositionOutOfRange { .. } => "position_out_of_range",
            ServiceError::PositionEmpty(_) => "position_empty",
            ServiceError::SimDisabled => "sim_disabled",
            ServiceError::SimCommand(_) => "sim_command",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Io(_) | ServiceError::CorruptLog { .. } => "storage",
            ServiceError::Config(_) => "config",
        }
    }
}
