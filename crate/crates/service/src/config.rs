use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use geoseg_core::backends::Params;
use geoseg_core::geodesic::GeodesicConfig;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

pub const ENV_PORT: &str = "GEOSEG_PORT";
pub const ENV_DATA_ROOT: &str = "GEOSEG_DATA_ROOT";

/// What a mutating request does when another mutation on the same session is
/// still running.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusyPolicy {
    #[default]
    Wait,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    /// Session logs and submitted masks live under `<data_root>/sessions`.
    /// Relative volume references are resolved against it.
    pub data_root: PathBuf,
    pub busy_policy: BusyPolicy,
    /// Encoding of scribbles into distance channels.
    pub geodesic: GeodesicConfig,
    pub roi_expansion: f64,
    /// Per-backend parameter defaults, merged under request parameters.
    pub backend_params: BTreeMap<String, Params>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
            data_root: PathBuf::from("data"),
            busy_policy: BusyPolicy::Wait,
            geodesic: GeodesicConfig::default(),
            roi_expansion: 2.0,
            backend_params: BTreeMap::new(),
        }
    }
}

impl ServiceConfig {
    pub fn from_file(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `GEOSEG_PORT` and `GEOSEG_DATA_ROOT` from `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        if let Some(p) = lookup(ENV_PORT) {
            self.port = p
                .parse()
                .map_err(|_| ServiceError::Config(format!("{ENV_PORT}={p} is not a port number")))?;
        }
        if let Some(root) = lookup(ENV_DATA_ROOT) {
            self.data_root = PathBuf::from(root);
        }
        Ok(())
    }

    /// Optional config file, then environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        let mut cfg = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn socket_addr(&self) -> Result<SocketAddr, ServiceError> {
        format!("{}:{}", self.bind, self.port)
            .parse()
            .map_err(|e| ServiceError::Config(format!("bad bind address: {e}")))
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.data_root.join("sessions")
    }

    pub fn resolve_ref(&self, r: &Path) -> PathBuf {
        if r.is_absolute() {
            r.to_path_buf()
        } else {
            self.data_root.join(r)
        }
    }
}
