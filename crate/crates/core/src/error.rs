use thiserror::Error;

/// Errors produced by the simulation and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// One entry per violated generator constraint.
    #[error("invalid generator: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),

    #[error(
        "bound-too-loose: stopping rule not met after {arrivals} arrivals (deficit {deficit:e})"
    )]
    BoundTooLoose { arrivals: usize, deficit: f64 },

    #[error("unknown check id: {0}")]
    UnknownCheck(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
