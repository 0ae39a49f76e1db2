use std::path::{Path, PathBuf};

use geoseg_core::backends::Registry;
use geoseg_core::rle::MaskPayload;
use geoseg_core::Mask;
use geoseg_service::session::FINAL_MASK_JSON;
use geoseg_service::{read_log, Session};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub events: usize,
    pub voxel_count: usize,
    pub sealed: bool,
    /// The submitted mask next to the log, if any.
    pub recorded: Option<PathBuf>,
    /// Whether the replayed mask equals the recorded one bit for bit.
    pub matches_recorded: Option<bool>,
    #[serde(skip)]
    pub mask: Mask,
}

/// Replays `log` on a fresh registry and compares the result with the
/// `final_mask.json` written at submit time, when present.
pub fn replay_log(log: &Path) -> Result<ReplayOutcome, CliError> {
    let events = read_log(log)?;
    let session = Session::replay(&events, &Registry::with_builtins())?;
    let mask = session.current_mask().clone();
    let recorded = log.parent().map(|d| d.join(FINAL_MASK_JSON)).filter(|p| p.is_file());
    let matches_recorded = match &recorded {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
            let payload: MaskPayload =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            Some(payload.to_mask()? == mask)
        }
        None => None,
    };
    Ok(ReplayOutcome {
        events: events.len(),
        voxel_count: mask.count(),
        sealed: session.is_sealed(),
        recorded,
        matches_recorded,
        mask,
    })
}
