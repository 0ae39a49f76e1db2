use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use geoseg_cli::bench::{bench_gdt, write_csv, BenchRow};
use geoseg_cli::experiment::{derived_seeds, run_interactive_experiment, write_report, ExperimentConfig, Source};
use geoseg_cli::replay::replay_log;
use geoseg_core::geodesic::{GeodesicConfig, Neighborhood};
use geoseg_core::io::{save_mask_nifti, save_volume, VolumeFormat};
use geoseg_core::phantom::{generate_phantom, PhantomSpec};
use geoseg_core::rle::MaskPayload;
use geoseg_core::Dims;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "geoseg", version, about = "Phantoms, geodesic transform benchmarks and simulated annotation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every random draw of the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Exit with a nonzero status if an acceptance threshold is missed.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic anatomical/functional pair and its ground truth.
    Phantom {
        #[command(flatten)]
        common: Common,
        /// Phantom description (JSON); defaults to the standard phantom.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Time the full-volume and RoI geodesic transforms on random volumes.
    BenchGdt {
        #[command(flatten)]
        common: Common,
        /// Volume sizes as WxHxD; repeatable.
        #[arg(long = "dims", default_values_t = vec!["128x128x128".to_string()])]
        dims: Vec<String>,
        /// RoI voxel count as a fraction of the volume; repeatable.
        #[arg(long = "roi-fraction", default_values_t = vec![1.0 / 64.0])]
        roi_fraction: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        passes: u32,
        #[arg(long, default_value_t = 26)]
        neighborhood: u8,
        #[arg(long, default_value_t = 1.0)]
        lambda: f32,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Required speedup for RoI fractions of 1/64 or less under --check.
        #[arg(long, default_value_t = 20.0)]
        min_speedup: f64,
    },
    /// Run the propose / correct / refine loop against a ground truth.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Experiment configuration (JSON); defaults to the tuned settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Phantom description (JSON); defaults to the standard phantom.
        #[arg(long, conflicts_with_all = ["anatomical", "functional", "gt"])]
        phantom_spec: Option<PathBuf>,
        #[arg(long, requires_all = ["functional", "gt"])]
        anatomical: Option<PathBuf>,
        #[arg(long)]
        functional: Option<PathBuf>,
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        budget: Option<usize>,
        /// Dice the run must reach under --check.
        #[arg(long, default_value_t = 0.85)]
        min_dice: f64,
    },
    /// Rebuild a session from its event log.
    Replay {
        /// Path to a session's events.jsonl.
        #[arg(long)]
        log: PathBuf,
        /// Where to write the replayed mask.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail unless the replay matches the recorded final mask.
        #[arg(long)]
        check: bool,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn parse_dims(s: &str) -> anyhow::Result<Dims> {
    let parts: Vec<usize> = s
        .split(['x', 'X', ','])
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad dims '{s}'"))?;
    match parts[..] {
        [w, h, d] if w > 0 && h > 0 && d > 0 => Ok(Dims::new(w, h, d)),
        _ => bail!("dims must be three positive integers, got '{s}'"),
    }
}

fn phantom_spec(path: Option<&Path>, phantom_seed: u64) -> anyhow::Result<PhantomSpec> {
    Ok(match path {
        Some(p) => read_json(p)?,
        None => PhantomSpec::standard(phantom_seed),
    })
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Phantom { common, spec } => {
            std::fs::create_dir_all(&common.out)?;
            let spec = phantom_spec(spec.as_deref(), derived_seeds(common.seed).0)?;
            let (pair, gt) = generate_phantom(&spec)?;
            save_volume(&common.out.join("anatomical.nii"), pair.anatomical(), VolumeFormat::Nifti1)?;
            save_volume(&common.out.join("functional.nii"), pair.functional(), VolumeFormat::Nifti1)?;
            save_mask_nifti(&common.out.join("gt.nii"), &gt, pair.spacing())?;
            write_json(&common.out.join("spec.json"), &spec)?;
            println!("wrote phantom ({} lesion voxels) to {}", gt.count(), common.out.display());
            Ok(true)
        }
        Command::BenchGdt {
            common,
            dims,
            roi_fraction,
            passes,
            neighborhood,
            lambda,
            reps,
            min_speedup,
        } => {
            std::fs::create_dir_all(&common.out)?;
            let cfg = GeodesicConfig {
                lambda,
                passes,
                neighborhood: Neighborhood::try_from(neighborhood).map_err(anyhow::Error::msg)?,
                ..GeodesicConfig::default()
            };
            let mut rows: Vec<BenchRow> = Vec::new();
            for d in &dims {
                let d = parse_dims(d)?;
                for &f in &roi_fraction {
                    let row = bench_gdt(d, f, &cfg, reps, common.seed)?;
                    println!(
                        "{} roi={} full={:.1}ms roi={:.2}ms speedup={:.1}x",
                        row.dims, row.roi_voxels, row.t_full_ms, row.t_roi_ms, row.speedup
                    );
                    rows.push(row);
                }
            }
            let csv = common.out.join("bench_gdt.csv");
            write_csv(&csv, &rows)?;
            println!("wrote {}", csv.display());
            let mut ok = true;
            for r in &rows {
                if r.roi_fraction <= 1.0 / 64.0 + 1e-12 && r.speedup < min_speedup {
                    eprintln!("FAIL {} speedup {:.1} < {min_speedup}", r.dims, r.speedup);
                    ok = false;
                }
                if let Some(e) = r.mean_rel_err_vs_oracle.filter(|&e| e > 0.05) {
                    eprintln!("FAIL {} mean relative error {e:.4} > 0.05", r.dims);
                    ok = false;
                }
            }
            Ok(ok || !common.check)
        }
        Command::Simulate {
            common,
            config,
            phantom_spec: spec_path,
            anatomical,
            functional,
            gt,
            backend,
            budget,
            min_dice,
        } => {
            std::fs::create_dir_all(&common.out)?;
            let mut cfg: ExperimentConfig = match &config {
                Some(p) => read_json(p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(b) = backend {
                cfg.backend = b;
            }
            if let Some(b) = budget {
                cfg.budget = b;
            }
            let (phantom_seed, annotator_seed) = derived_seeds(common.seed);
            let source = match (anatomical, functional, gt) {
                (Some(anatomical), Some(functional), Some(gt)) => Source::Files {
                    anatomical,
                    functional,
                    gt,
                },
                _ => Source::Phantom(phantom_spec(spec_path.as_deref(), phantom_seed)?),
            };
            let report = run_interactive_experiment(&source, &cfg, annotator_seed, &common.out)?;
            write_report(&report, &common.out)?;
            for r in &report.iterations {
                println!("iteration {} dice {:.4} ({:.1} ms)", r.iteration, r.dice, r.step_ms);
            }
            println!("report written to {}", common.out.display());
            let reached = report.final_dice >= min_dice;
            if !reached {
                eprintln!("FAIL final dice {:.4} < {min_dice}", report.final_dice);
            }
            Ok(reached || !common.check)
        }
        Command::Replay { log, out, check } => {
            let outcome = replay_log(&log)?;
            println!(
                "replayed {} events: {} voxels, sealed={}",
                outcome.events, outcome.voxel_count, outcome.sealed
            );
            if let Some(dir) = &out {
                std::fs::create_dir_all(dir)?;
                save_mask_nifti(&dir.join("replayed_mask.nii"), &outcome.mask, Default::default())?;
                write_json(&dir.join("replayed_mask.json"), &MaskPayload::from_mask(&outcome.mask))?;
            }
            let ok = match outcome.matches_recorded {
                Some(true) => {
                    println!("matches recorded final mask");
                    true
                }
                Some(false) => {
                    eprintln!("FAIL replayed mask differs from the recorded final mask");
                    false
                }
                None => {
                    eprintln!("no recorded final mask next to the log");
                    false
                }
            };
            Ok(ok || !check)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
