use std::io;

use thiserror::Error;

/// Errors raised by the simulator, planners and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("episode already finished; no further actions accepted")]
    EpisodeFinished,
    #[error("time horizon of {0} steps exhausted")]
    HorizonExhausted(u64),
    #[error("expected {expected} actions (workers then stations), got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("infeasible plan: {0}")]
    Infeasible(String),
    #[error("disconnected area: {0}")]
    Disconnected(String),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error("unknown planner `{0}`")]
    UnknownPlanner(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidScenario(msg.into())
    }
}
