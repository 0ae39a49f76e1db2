#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session '{0}'")]
    UnknownSession(String),
    #[error("session '{0}' is sealed")]
    Sealed(String),
    #[error("session '{0}' is busy")]
    Busy(String),
    #[error("nothing to refine: run propose or add scribbles first")]
    NothingToRefine,
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("event log {path}: {reason}")]
    Log { path: String, reason: String },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Core(#[from] geoseg_core::Error),
}

pub type ServiceResult<T> = Result<T, ServiceError>;
