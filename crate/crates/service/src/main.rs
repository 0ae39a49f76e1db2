use std::path::PathBuf;

use anyhow::Context;
use geoseg_core::backends::Registry;
use geoseg_service::{router, AppState, ServiceConfig};
use tracing_subscriber::EnvFilter;

/// Usage: `geoseg-server [config.json]`. `GEOSEG_CONFIG` may name the file
/// instead; `GEOSEG_PORT` and `GEOSEG_DATA_ROOT` override its values.
#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("GEOSEG_CONFIG").map(PathBuf::from));
    let config = ServiceConfig::load(path.as_deref())?;
    std::fs::create_dir_all(config.sessions_dir())
        .with_context(|| format!("creating {}", config.sessions_dir().display()))?;
    let addr = config.socket_addr()?;
    let app = router(AppState::new(config, Registry::with_builtins()));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!("listening on {addr}");
    axum::serve(listener, app).await?;
    Ok(())
}
