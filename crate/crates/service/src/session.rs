//! Session state machine: propose → scribble → refine → … → submit.
//!
//! Every successful mutation is appended to the session's event log before
//! the call returns; [`Session::replay`] rebuilds the same state from that
//! log.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use geoseg_core::backends::{self, encode_interactions, enforce_constraints, BackendDescriptor, Params, Registry};
use geoseg_core::geodesic::GeodesicConfig;
use geoseg_core::interaction::ScribbleSet;
use geoseg_core::io::{load_mask, load_volume_auto, save_mask_nifti};
use geoseg_core::metrics::dice;
use geoseg_core::rle::{MaskPayload, ScribblePayload};
use geoseg_core::{Mask, ModalityPair};
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::error::{ServiceError, ServiceResult};
use crate::event::{EventKind, EventLog, EventPayload, LoggedEvent, LOG_FILE};

pub const FINAL_MASK_NIFTI: &str = "final_mask.nii";
pub const FINAL_MASK_JSON: &str = "final_mask.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateRequest {
    pub anatomical_ref: PathBuf,
    pub functional_ref: PathBuf,
    pub backend: String,
    #[serde(default)]
    pub gt_ref: Option<PathBuf>,
    /// Overrides of the backend parameters.
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub kind: EventKind,
    pub timestamp_us: u64,
    pub duration_ms: f64,
    pub voxel_count: usize,
    pub dice: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineTiming {
    pub encode_ms: f64,
    pub backend_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskUpdate {
    pub mask: MaskPayload,
    pub dice: Option<f64>,
    pub duration_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<RefineTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScribbleUpdate {
    pub accepted_foreground: usize,
    pub accepted_background: usize,
    /// Voxels of the delta that were previously scribbled as the other class.
    pub switched: usize,
    pub cumulative_foreground: usize,
    pub cumulative_background: usize,
    pub mask_voxel_count: usize,
}

/// Summary returned by submit. `events` lists the history up to the submit
/// call; `total_wall_clock_ms` runs from creation to submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRecord {
    pub id: String,
    pub backend: String,
    pub events: Vec<HistoryEntry>,
    pub total_wall_clock_ms: f64,
    pub mask: MaskPayload,
    pub dice: Option<f64>,
    pub nifti_path: Option<PathBuf>,
    pub rle_path: Option<PathBuf>,
}

#[derive(Debug)]
pub struct Session {
    id: String,
    pair: ModalityPair,
    current_mask: Mask,
    scribbles: ScribbleSet,
    history: Vec<HistoryEntry>,
    backend: BackendDescriptor,
    params: Params,
    geodesic: GeodesicConfig,
    roi_expansion: f64,
    gt: Option<Mask>,
    sealed: bool,
    has_prediction: bool,
    created_us: u64,
    last_us: u64,
    dir: Option<PathBuf>,
    log: Option<EventLog>,
}

fn now_us() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_micros() as u64)
        .unwrap_or(0)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl Session {
    /// Builds the create event for a request: resolves references against the
    /// data root and merges parameters (request over config over backend
    /// defaults).
    pub fn create_event(
        id: &str,
        req: &CreateRequest,
        cfg: &ServiceConfig,
        registry: &Registry,
    ) -> ServiceResult<EventPayload> {
        let descriptor = registry.get(&req.backend)?.descriptor();
        let mut params = descriptor.parameters.clone();
        if let Some(p) = cfg.backend_params.get(&req.backend) {
            params.extend(p.iter().map(|(k, v)| (k.clone(), *v)));
        }
        params.extend(req.params.iter().map(|(k, v)| (k.clone(), *v)));
        Ok(EventPayload::Create {
            id: id.to_string(),
            anatomical_ref: cfg.resolve_ref(&req.anatomical_ref),
            functional_ref: cfg.resolve_ref(&req.functional_ref),
            gt_ref: req.gt_ref.as_deref().map(|p| cfg.resolve_ref(p)),
            backend: req.backend.clone(),
            params,
            geodesic: cfg.geodesic,
            roi_expansion: cfg.roi_expansion,
        })
    }

    /// Loads the volumes named by a create event. The functional volume is
    /// resampled onto the anatomical grid.
    pub fn open(event: &EventPayload, registry: &Registry, created_us: u64) -> ServiceResult<Session> {
        let EventPayload::Create {
            id,
            anatomical_ref,
            functional_ref,
            gt_ref,
            backend,
            params,
            geodesic,
            roi_expansion,
        } = event
        else {
            return Err(ServiceError::BadRequest("first event must be a create event".into()));
        };
        geodesic.validate()?;
        if !(*roi_expansion >= 1.0) {
            return Err(ServiceError::BadRequest(format!("roi_expansion = {roi_expansion}")));
        }
        let descriptor = registry.get(backend)?.descriptor();
        let anatomical = load_volume_auto(anatomical_ref)?;
        let functional = load_volume_auto(functional_ref)?;
        let pair = ModalityPair::resampled(anatomical, &functional)?
            .with_provenance([anatomical_ref.display().to_string(), functional_ref.display().to_string()]);
        let dims = pair.dims();
        let gt = match gt_ref {
            Some(p) => {
                let m = load_mask(p)?;
                m.ensure_same_dims(dims)?;
                Some(m)
            }
            None => None,
        };
        Ok(Session {
            id: id.clone(),
            current_mask: Mask::empty(dims),
            scribbles: ScribbleSet::empty(dims),
            pair,
            history: Vec::new(),
            backend: descriptor,
            params: params.clone(),
            geodesic: *geodesic,
            roi_expansion: *roi_expansion,
            gt,
            sealed: false,
            has_prediction: false,
            created_us,
            last_us: created_us,
            dir: None,
            log: None,
        })
    }

    /// Creates a session whose log and submitted masks go to
    /// `<sessions_dir>/<id>/`.
    pub fn create(
        id: &str,
        req: &CreateRequest,
        cfg: &ServiceConfig,
        registry: &Registry,
        sessions_dir: &Path,
    ) -> ServiceResult<Session> {
        let event = Self::create_event(id, req, cfg, registry)?;
        let ts = now_us();
        let mut session = Self::open(&event, registry, ts)?;
        let dir = sessions_dir.join(id);
        let mut log = EventLog::create(&dir.join(LOG_FILE))?;
        log.append(ts, event)?;
        session.dir = Some(dir);
        session.log = Some(log);
        Ok(session)
    }

    /// Rebuilds a session from its events without writing anything.
    pub fn replay(events: &[LoggedEvent], registry: &Registry) -> ServiceResult<Session> {
        let (first, rest) = events
            .split_first()
            .ok_or_else(|| ServiceError::BadRequest("empty event log".into()))?;
        let mut s = Self::open(&first.payload, registry, first.timestamp_us)?;
        for ev in rest {
            s.apply(&ev.payload, registry, ev.timestamp_us)?;
        }
        Ok(s)
    }

    /// Replays the log in `dir` and keeps appending to it.
    pub fn resume(dir: &Path, registry: &Registry) -> ServiceResult<Session> {
        let path = dir.join(LOG_FILE);
        let events = crate::event::read_log(&path)?;
        let mut s = Self::replay(&events, registry)?;
        s.dir = Some(dir.to_path_buf());
        s.log = Some(EventLog::reopen(&path, events.len() as u64)?);
        Ok(s)
    }

    fn apply(&mut self, payload: &EventPayload, registry: &Registry, ts: u64) -> ServiceResult<()> {
        match payload {
            EventPayload::Create { .. } => {
                return Err(ServiceError::BadRequest("duplicate create event".into()));
            }
            EventPayload::Propose => {
                self.do_propose(registry, ts)?;
            }
            EventPayload::Scribble { delta } => {
                let delta = delta.to_set()?;
                self.do_add_scribbles(&delta, ts)?;
            }
            EventPayload::Refine => {
                self.do_refine(registry, ts)?;
            }
            EventPayload::Submit => {
                self.do_submit(ts)?;
            }
        }
        self.last_us = self.last_us.max(ts);
        Ok(())
    }

    fn next_timestamp(&mut self) -> u64 {
        let t = now_us().max(self.last_us + 1);
        self.last_us = t;
        t
    }

    fn record(&mut self, ts: u64, payload: EventPayload) -> ServiceResult<()> {
        if let Some(log) = self.log.as_mut() {
            log.append(ts, payload)?;
        }
        Ok(())
    }

    fn ensure_open(&self) -> ServiceResult<()> {
        if self.sealed {
            return Err(ServiceError::Sealed(self.id.clone()));
        }
        Ok(())
    }

    fn current_dice(&self) -> ServiceResult<Option<f64>> {
        Ok(match &self.gt {
            Some(gt) => Some(dice(&self.current_mask, gt)?),
            None => None,
        })
    }

    fn push_history(&mut self, kind: EventKind, ts: u64, duration_ms: f64) -> ServiceResult<Option<f64>> {
        let d = self.current_dice()?;
        self.history.push(HistoryEntry {
            kind,
            timestamp_us: ts,
            duration_ms,
            voxel_count: self.current_mask.count(),
            dice: d,
        });
        Ok(d)
    }

    fn do_propose(&mut self, registry: &Registry, ts: u64) -> ServiceResult<MaskUpdate> {
        self.ensure_open()?;
        let t = Instant::now();
        let mask = backends::propose(registry, &self.backend.name, &self.pair, &self.params)?;
        self.current_mask = enforce_constraints(&mask, &self.scribbles)?;
        self.has_prediction = true;
        let duration_ms = ms_since(t);
        let dice = self.push_history(EventKind::Propose, ts, duration_ms)?;
        Ok(MaskUpdate {
            mask: MaskPayload::from_mask(&self.current_mask),
            dice,
            duration_ms,
            timing: None,
        })
    }

    fn do_add_scribbles(&mut self, delta: &ScribbleSet, ts: u64) -> ServiceResult<ScribbleUpdate> {
        self.ensure_open()?;
        delta.foreground.ensure_same_dims(self.pair.dims())?;
        let t = Instant::now();
        let switched = delta.foreground.intersection_count(&self.scribbles.background)?
            + delta.background.intersection_count(&self.scribbles.foreground)?;
        self.scribbles.apply(delta)?;
        self.current_mask = enforce_constraints(&self.current_mask, &self.scribbles)?;
        self.push_history(EventKind::Scribble, ts, ms_since(t))?;
        Ok(ScribbleUpdate {
            accepted_foreground: delta.foreground.count(),
            accepted_background: delta.background.count(),
            switched,
            cumulative_foreground: self.scribbles.foreground.count(),
            cumulative_background: self.scribbles.background.count(),
            mask_voxel_count: self.current_mask.count(),
        })
    }

    fn do_refine(&mut self, registry: &Registry, ts: u64) -> ServiceResult<MaskUpdate> {
        self.ensure_open()?;
        if !self.has_prediction && self.scribbles.is_empty() {
            return Err(ServiceError::NothingToRefine);
        }
        let t = Instant::now();
        let channels = encode_interactions(
            &self.pair,
            &self.scribbles,
            &self.current_mask,
            &self.geodesic,
            self.roi_expansion,
        )?;
        let encode_ms = ms_since(t);
        let tb = Instant::now();
        let mask = backends::refine(registry, &self.backend.name, &self.pair, &channels, &self.params)?;
        let backend_ms = ms_since(tb);
        self.current_mask = enforce_constraints(&mask, &self.scribbles)?;
        self.has_prediction = true;
        let duration_ms = ms_since(t);
        let dice = self.push_history(EventKind::Refine, ts, duration_ms)?;
        Ok(MaskUpdate {
            mask: MaskPayload::from_mask(&self.current_mask),
            dice,
            duration_ms,
            timing: Some(RefineTiming { encode_ms, backend_ms }),
        })
    }

    fn do_submit(&mut self, ts: u64) -> ServiceResult<FinalRecord> {
        self.ensure_open()?;
        let t = Instant::now();
        let payload = MaskPayload::from_mask(&self.current_mask);
        let (mut nifti_path, mut rle_path) = (None, None);
        // Replayed sessions have no directory and write nothing.
        if let (Some(dir), Some(_)) = (&self.dir, &self.log) {
            let nii = dir.join(FINAL_MASK_NIFTI);
            save_mask_nifti(&nii, &self.current_mask, self.pair.spacing())?;
            let json = dir.join(FINAL_MASK_JSON);
            let text = serde_json::to_string(&payload).map_err(|e| ServiceError::Internal(e.to_string()))?;
            std::fs::write(&json, text).map_err(|e| ServiceError::Internal(format!("{}: {e}", json.display())))?;
            nifti_path = Some(nii);
            rle_path = Some(json);
        }
        self.sealed = true;
        self.last_us = self.last_us.max(ts);
        tracing::debug!(id = %self.id, ms = ms_since(t), "session submitted");
        Ok(FinalRecord {
            id: self.id.clone(),
            backend: self.backend.name.clone(),
            events: self.history.clone(),
            total_wall_clock_ms: ts.saturating_sub(self.created_us) as f64 / 1e3,
            mask: payload,
            dice: self.current_dice()?,
            nifti_path,
            rle_path,
        })
    }

    pub fn propose(&mut self, registry: &Registry) -> ServiceResult<MaskUpdate> {
        let ts = self.next_timestamp();
        let out = self.do_propose(registry, ts)?;
        self.record(ts, EventPayload::Propose)?;
        Ok(out)
    }

    pub fn add_scribbles(&mut self, delta: &ScribbleSet) -> ServiceResult<ScribbleUpdate> {
        let ts = self.next_timestamp();
        let out = self.do_add_scribbles(delta, ts)?;
        self.record(
            ts,
            EventPayload::Scribble {
                delta: ScribblePayload::from_set(delta),
            },
        )?;
        Ok(out)
    }

    pub fn refine(&mut self, registry: &Registry) -> ServiceResult<MaskUpdate> {
        let ts = self.next_timestamp();
        let out = self.do_refine(registry, ts)?;
        self.record(ts, EventPayload::Refine)?;
        Ok(out)
    }

    pub fn submit(&mut self) -> ServiceResult<FinalRecord> {
        let ts = self.next_timestamp();
        let out = self.do_submit(ts)?;
        self.record(ts, EventPayload::Submit)?;
        Ok(out)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn pair(&self) -> &ModalityPair {
        &self.pair
    }

    pub fn current_mask(&self) -> &Mask {
        &self.current_mask
    }

    pub fn scribbles(&self) -> &ScribbleSet {
        &self.scribbles
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn backend(&self) -> &BackendDescriptor {
        &self.backend
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn gt(&self) -> Option<&Mask> {
        self.gt.as_ref()
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log.as_ref().map(|l| l.path())
    }
}
