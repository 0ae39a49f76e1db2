//! Simulated-annotator experiments run through the session engine.

use std::path::{Path, PathBuf};
use std::time::Instant;

use geoseg_core::backends::{Params, Registry};
use geoseg_core::geodesic::GeodesicConfig;
use geoseg_core::interaction::{corrective_annotator_step, SimulationConfig};
use geoseg_core::io::{save_mask_nifti, save_volume, VolumeFormat};
use geoseg_core::phantom::{generate_phantom, PhantomSpec};
use geoseg_core::rng::SimRng;
use geoseg_core::Mask;
use geoseg_service::session::CreateRequest;
use geoseg_service::{ServiceConfig, Session};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "iterations.csv";
pub const SESSION_ID: &str = "experiment";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub backend: String,
    /// Number of corrective interactions after the proposal.
    pub budget: usize,
    /// Stop once Dice reaches this value.
    pub stop_dice: f64,
    pub geodesic: GeodesicConfig,
    pub roi_expansion: f64,
    pub params: Params,
    pub simulation: SimulationConfig,
}

impl Default for ExperimentConfig {
    /// Values tuned on the standard phantom.
    fn default() -> Self {
        ExperimentConfig {
            backend: "geodesic-refiner".into(),
            budget: 5,
            stop_dice: 0.95,
            geodesic: GeodesicConfig {
                lambda: 30.0,
                ..GeodesicConfig::default()
            },
            roi_expansion: 1.5,
            params: [("w_prev".to_string(), 0.5)].into_iter().collect(),
            simulation: SimulationConfig::default(),
        }
    }
}

/// Where the volumes come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Phantom(PhantomSpec),
    Files {
        anatomical: PathBuf,
        functional: PathBuf,
        gt: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 0 is the proposal.
    pub iteration: usize,
    pub dice: f64,
    pub voxel_count: usize,
    /// Wall clock of the whole step (annotator, scribbles and refine).
    pub step_ms: f64,
    pub encode_ms: Option<f64>,
    pub backend_ms: Option<f64>,
    pub scribbled_foreground: usize,
    pub scribbled_background: usize,
    pub mask_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdtTiming {
    pub iteration: usize,
    pub encode_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub source: Source,
    pub session_log: PathBuf,
    pub iterations: Vec<IterationRecord>,
    pub gdt_timing: Vec<GdtTiming>,
    pub proposal_dice: f64,
    pub final_dice: f64,
    pub stopped_early: bool,
    pub total_ms: f64,
}

impl ExperimentReport {
    /// Dice trajectory, proposal first.
    pub fn dice_values(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.dice).collect()
    }

    /// Number of interactions until Dice first reached `threshold`.
    pub fn interactions_to_reach(&self, threshold: f64) -> Option<usize> {
        self.iterations.iter().find(|r| r.dice >= threshold).map(|r| r.iteration)
    }
}

/// Seeds for the phantom noise and the annotator, both derived from `seed`.
pub fn derived_seeds(seed: u64) -> (u64, u64) {
    let mut master = SimRng::new(seed);
    (master.next_u64(), master.next_u64())
}

fn write_inputs(source: &Source, out: &Path) -> Result<CreateRequest, CliError> {
    match source {
        Source::Phantom(spec) => {
            let (pair, gt) = generate_phantom(spec)?;
            let dir = out.join("volumes");
            std::fs::create_dir_all(&dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
            save_volume(&dir.join("anatomical.nii"), pair.anatomical(), VolumeFormat::Nifti1)?;
            save_volume(&dir.join("functional.nii"), pair.functional(), VolumeFormat::Nifti1)?;
            save_mask_nifti(&dir.join("gt.nii"), &gt, pair.spacing())?;
            Ok(CreateRequest {
                anatomical_ref: dir.join("anatomical.nii"),
                functional_ref: dir.join("functional.nii"),
                backend: String::new(),
                gt_ref: Some(dir.join("gt.nii")),
                params: Params::new(),
            })
        }
        Source::Files {
            anatomical,
            functional,
            gt,
        } => Ok(CreateRequest {
            anatomical_ref: anatomical.clone(),
            functional_ref: functional.clone(),
            backend: String::new(),
            gt_ref: Some(gt.clone()),
            params: Params::new(),
        }),
    }
}

/// Proposal, then up to `budget` rounds of corrective annotation and
/// refinement, stopping early once Dice reaches `stop_dice`. Every
/// iteration's mask is written to `<out>/masks/`; the session log lives in
/// `<out>/sessions/experiment/`.
pub fn run_interactive_experiment(
    source: &Source,
    cfg: &ExperimentConfig,
    annotator_seed: u64,
    out: &Path,
) -> Result<ExperimentReport, CliError> {
    let started = Instant::now();
    cfg.simulation.validate()?;
    let mut req = write_inputs(source, out)?;
    req.backend = cfg.backend.clone();
    req.params = cfg.params.clone();
    let service_cfg = ServiceConfig {
        data_root: out.to_path_buf(),
        geodesic: cfg.geodesic,
        roi_expansion: cfg.roi_expansion,
        ..ServiceConfig::default()
    };
    let registry = Registry::with_builtins();
    let sessions = service_cfg.sessions_dir();
    let session_dir = sessions.join(SESSION_ID);
    if session_dir.exists() {
        std::fs::remove_dir_all(&session_dir)
            .map_err(|e| CliError::Output(format!("{}: {e}", session_dir.display())))?;
    }
    let mut session = Session::create(SESSION_ID, &req, &service_cfg, &registry, &sessions)?;
    let gt = session
        .gt()
        .cloned()
        .ok_or_else(|| CliError::Usage("experiment needs a ground truth".into()))?;
    let spacing = session.pair().spacing();
    let masks_dir = out.join("masks");
    std::fs::create_dir_all(&masks_dir).map_err(|e| CliError::Output(format!("{}: {e}", masks_dir.display())))?;
    let save = |iteration: usize, mask: &Mask| -> Result<PathBuf, CliError> {
        let p = masks_dir.join(format!("iter_{iteration:02}.nii"));
        save_mask_nifti(&p, mask, spacing)?;
        Ok(p)
    };

    let mut rng = SimRng::new(annotator_seed);
    let mut iterations = Vec::new();
    let mut gdt_timing = Vec::new();

    let t = Instant::now();
    let p = session
        .propose(&registry)
        .map_err(|source| CliError::Iteration { iteration: 0, source })?;
    let proposal_dice = p.dice.unwrap_or(0.0);
    iterations.push(IterationRecord {
        iteration: 0,
        dice: proposal_dice,
        voxel_count: p.mask.voxel_count,
        step_ms: t.elapsed().as_secs_f64() * 1e3,
        encode_ms: None,
        backend_ms: None,
        scribbled_foreground: 0,
        scribbled_background: 0,
        mask_path: save(0, session.current_mask())?,
    });

    let mut dice = proposal_dice;
    let mut stopped_early = false;
    for iteration in 1..=cfg.budget {
        if dice >= cfg.stop_dice {
            stopped_early = true;
            break;
        }
        let t = Instant::now();
        let wrap = |source| CliError::Iteration { iteration, source };
        let delta = corrective_annotator_step(&gt, session.current_mask(), &cfg.simulation, &mut rng)
            .map_err(|e| wrap(e.into()))?;
        session.add_scribbles(&delta).map_err(wrap)?;
        let r = session.refine(&registry).map_err(wrap)?;
        dice = r.dice.unwrap_or(0.0);
        let timing = r.timing.clone();
        if let Some(tm) = &timing {
            gdt_timing.push(GdtTiming {
                iteration,
                encode_ms: tm.encode_ms,
            });
        }
        iterations.push(IterationRecord {
            iteration,
            dice,
            voxel_count: r.mask.voxel_count,
            step_ms: t.elapsed().as_secs_f64() * 1e3,
            encode_ms: timing.as_ref().map(|t| t.encode_ms),
            backend_ms: timing.as_ref().map(|t| t.backend_ms),
            scribbled_foreground: delta.foreground.count(),
            scribbled_background: delta.background.count(),
            mask_path: save(iteration, session.current_mask())?,
        });
    }
    session.submit()?;

    Ok(ExperimentReport {
        schema_version: geoseg_service::SCHEMA_VERSION,
        config: cfg.clone(),
        seed: annotator_seed,
        source: source.clone(),
        session_log: session.log_path().map(Path::to_path_buf).unwrap_or_default(),
        iterations,
        gdt_timing,
        proposal_dice,
        final_dice: dice,
        stopped_early,
        total_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    iteration: usize,
    dice: f64,
    voxel_count: usize,
    step_ms: f64,
    encode_ms: Option<f64>,
    backend_ms: Option<f64>,
    scribbled_foreground: usize,
    scribbled_background: usize,
    mask_path: &'a str,
}

pub fn write_report(report: &ExperimentReport, out: &Path) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(report).map_err(|e| CliError::Output(e.to_string()))?;
    let p = out.join(REPORT_JSON);
    std::fs::write(&p, json).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
    let p = out.join(REPORT_CSV);
    let mut w = csv::Writer::from_path(&p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
    for r in &report.iterations {
        let path = r.mask_path.to_string_lossy();
        w.serialize(CsvRow {
            iteration: r.iteration,
            dice: r.dice,
            voxel_count: r.voxel_count,
            step_ms: r.step_ms,
            encode_ms: r.encode_ms,
            backend_ms: r.backend_ms,
            scribbled_foreground: r.scribbled_foreground,
            scribbled_background: r.scribbled_background,
            mask_path: &path,
        })
        .map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))
}
