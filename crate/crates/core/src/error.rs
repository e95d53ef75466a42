use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty region")]
    EmptyRegion,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid data: {0}")]
    InvalidData(String),

    #[error("dual undefined at p=1")]
    DualUndefined,

    #[error("no large-cube scale: half width must exceed 1 (got {0})")]
    NoLargeScale(f64),

    #[error("iteration diverged: {0}")]
    Divergence(String),

    #[error("base hypothesis fails: {0}")]
    HypothesisFails(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
