#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: geoseg_service::ServiceError,
    },
    #[error(transparent)]
    Service(#[from] geoseg_service::ServiceError),
    #[error(transparent)]
    Core(#[from] geoseg_core::Error),
}
