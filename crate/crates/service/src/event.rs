//! Append-only JSON-lines session log.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use geoseg_core::backends::Params;
use geoseg_core::geodesic::GeodesicConfig;
use geoseg_core::rle::ScribblePayload;
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};

pub const LOG_FILE: &str = "events.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Create,
    Propose,
    Scribble,
    Refine,
    Submit,
}

/// Everything needed to rebuild a session. The create event pins the
/// resolved volume paths and the effective parameters, so replay does not
/// depend on the current service configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventPayload {
    Create {
        id: String,
        anatomical_ref: PathBuf,
        functional_ref: PathBuf,
        gt_ref: Option<PathBuf>,
        backend: String,
        params: Params,
        geodesic: GeodesicConfig,
        roi_expansion: f64,
    },
    Propose,
    Scribble {
        delta: ScribblePayload,
    },
    Refine,
    Submit,
}

impl EventPayload {
    pub fn kind(&self) -> EventKind {
        match self {
            EventPayload::Create { .. } => EventKind::Create,
            EventPayload::Propose => EventKind::Propose,
            EventPayload::Scribble { .. } => EventKind::Scribble,
            EventPayload::Refine => EventKind::Refine,
            EventPayload::Submit => EventKind::Submit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub seq: u64,
    /// Microseconds since the Unix epoch.
    pub timestamp_us: u64,
    #[serde(flatten)]
    pub payload: EventPayload,
}

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    next_seq: u64,
}

fn log_err(path: &Path, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Log {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

impl EventLog {
    /// Creates a new log, failing if one already exists at `path`.
    pub fn create(path: &Path) -> ServiceResult<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| log_err(path, e))?;
        }
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(path)
            .map_err(|e| log_err(path, e))?;
        Ok(EventLog {
            path: path.to_path_buf(),
            file,
            next_seq: 0,
        })
    }

    /// Reopens an existing log for appending after `existing` events.
    pub fn reopen(path: &Path, existing: u64) -> ServiceResult<Self> {
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| log_err(path, e))?;
        Ok(EventLog {
            path: path.to_path_buf(),
            file,
            next_seq: existing,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, timestamp_us: u64, payload: EventPayload) -> ServiceResult<LoggedEvent> {
        let ev = LoggedEvent {
            seq: self.next_seq,
            timestamp_us,
            payload,
        };
        let mut line = serde_json::to_string(&ev).map_err(|e| log_err(&self.path, e))?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| log_err(&self.path, e))?;
        self.next_seq += 1;
        Ok(ev)
    }
}

pub fn read_log(path: &Path) -> ServiceResult<Vec<LoggedEvent>> {
    let file = File::open(path).map_err(|e| log_err(path, e))?;
    let mut events = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| log_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: LoggedEvent =
            serde_json::from_str(&line).map_err(|e| log_err(path, format!("line {}: {e}", n + 1)))?;
        events.push(ev);
    }
    Ok(events)
}
