//! Acceptance suite. Runs every criterion sequentially (timings are not
//! disturbed by parallel tests) and prints one PASS/FAIL line per criterion.

use std::path::PathBuf;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use geoseg_cli::bench::{bench_gdt, mean_relative_error, random_volume};
use geoseg_cli::experiment::{derived_seeds, run_interactive_experiment, ExperimentConfig, Source};
use geoseg_cli::replay::replay_log;
use geoseg_core::backends::graphcut::{graphcut_segment, GraphCutModel, GraphCutParams, Seed};
use geoseg_core::backends::{enforce_constraints, Params, Registry};
use geoseg_core::bbox::{bbox_of_mask, expand_bbox};
use geoseg_core::geodesic::{gdt_exact, gdt_full, gdt_roi, GeodesicConfig, DEFAULT_OUTSIDE_VALUE};
use geoseg_core::interaction::{
    calc_ellipsoid, corrective_annotator_step, sample_ellipsoid, simulate_training_annotations_detailed, Ellipsoid,
    ScribbleClass, ScribbleSet, SimulationConfig,
};
use geoseg_core::io::{load_mask, save_mask_nifti, save_volume, VolumeFormat};
use geoseg_core::metrics::dice;
use geoseg_core::phantom::{generate_phantom, PhantomSpec};
use geoseg_core::rle::ScribblePayload;
use geoseg_core::rng::SimRng;
use geoseg_core::{BoundingBox, Dims, Mask, ModalityPair, Spacing, Volume};
use geoseg_service::session::CreateRequest;
use geoseg_service::{read_log, router, AppState, ServiceConfig, Session};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_seeds(dims: Dims, n: usize, rng: &mut SimRng) -> Mask {
    Mask::from_indices(dims, (0..n).map(|_| rng.below(dims.len() as u64) as usize))
}

fn ellipsoid(dims: Dims, center: [usize; 3], semi_axes: [f64; 3]) -> Mask {
    calc_ellipsoid(&Ellipsoid { center, semi_axes }, dims).unwrap()
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let row = bench_gdt(Dims::new(256, 256, 256), 1.0 / 64.0, &GeodesicConfig::default(), 5, 1)
        .map_err(|e| e.to_string())?;
    let total = started.elapsed().as_secs_f64();
    let detail = format!(
        "median full {:.0} ms, roi {:.1} ms, speedup {:.1}x, total {:.1} s",
        row.t_full_ms, row.t_roi_ms, row.speedup, total
    );
    ensure(row.roi_voxels == 64 * 64 * 64, || format!("roi has {} voxels", row.roi_voxels))?;
    ensure(row.speedup >= 20.0 && total < 120.0, || detail.clone())?;
    Ok(detail)
}

fn criterion_2() -> Outcome {
    let dims = Dims::new(32, 32, 32);
    let mut rng = SimRng::new(2);
    for case in 0..20 {
        let img = random_volume(dims, &mut rng);
        let seeds = random_seeds(dims, 1 + case % 4, &mut rng);
        let cfg = GeodesicConfig {
            lambda: rng.uniform01() as f32 * 4.0,
            ..GeodesicConfig::default()
        };
        let full = gdt_full(&img, &seeds, &cfg).unwrap();
        let roi = gdt_roi(&img, &seeds, &cfg, &BoundingBox::full(dims), DEFAULT_OUTSIDE_VALUE).unwrap();
        let same = full.values().iter().zip(roi.values()).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(same, || format!("random case {case}: full-volume RoI differs"))?;
    }
    let mut max_diff = 0.0f32;
    for case in 0..20 {
        let img = Volume::filled(dims, Spacing::UNIT, rng.uniform01() as f32 * 10.0).unwrap();
        let mut min = [0; 3];
        let mut max = [0; 3];
        for k in 0..3 {
            min[k] = rng.below(12) as usize;
            max[k] = min[k] + 8 + rng.below(12) as usize;
        }
        let roi = BoundingBox::new(min, max).unwrap();
        let seeds = Mask::from_fn(dims, |p| roi.contains(p) && rng.uniform01() < 0.002);
        let seeds = if seeds.is_empty() { Mask::from_indices(dims, [dims.index_of(min)]) } else { seeds };
        let full = gdt_full(&img, &seeds, &GeodesicConfig::default()).unwrap();
        let part = gdt_roi(&img, &seeds, &GeodesicConfig::default(), &roi, DEFAULT_OUTSIDE_VALUE).unwrap();
        for i in roi.indices(dims) {
            max_diff = max_diff.max((full.values()[i] - part.values()[i]).abs());
        }
        ensure(max_diff == 0.0, || format!("constant case {case}: in-RoI difference {max_diff}"))?;
    }
    Ok("20 random instances bit-identical; 20 constant instances with in-RoI difference 0".into())
}

fn criterion_3() -> Outcome {
    let dims = Dims::new(16, 16, 16);
    let mut rng = SimRng::new(3);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let img = random_volume(dims, &mut rng);
        let seeds = random_seeds(dims, 1 + case % 3, &mut rng);
        for lambda in [0.0, 1.0] {
            let cfg = GeodesicConfig {
                lambda,
                ..GeodesicConfig::default()
            };
            let full = gdt_full(&img, &seeds, &cfg).unwrap();
            let exact = gdt_exact(&img, &seeds, &cfg).unwrap();
            let below = exact.values().iter().zip(full.values()).all(|(e, f)| e <= f);
            ensure(below, || format!("case {case}, lambda {lambda}: exact exceeds raster"))?;
            let err = mean_relative_error(full.values(), exact.values());
            worst = worst.max(err);
            ensure(err <= 0.05, || format!("case {case}, lambda {lambda}: mean relative error {err:.4}"))?;
        }
    }
    Ok(format!("worst mean relative error {:.4}%", worst * 100.0))
}

fn phantom_gts() -> Vec<Mask> {
    [
        (Dims::new(40, 40, 40), [20, 20, 20], [8.0, 6.0, 5.0]),
        (Dims::new(48, 44, 40), [20, 25, 18], [5.0, 9.0, 4.0]),
        (Dims::new(56, 56, 48), [30, 26, 24], [12.0, 10.0, 8.0]),
    ]
    .into_iter()
    .map(|(dims, center, axes)| ellipsoid(dims, center, axes))
    .collect()
}

fn criterion_4() -> Outcome {
    let cfg = SimulationConfig::default();
    let mut rng = SimRng::new(4);
    for (g, gt) in phantom_gts().iter().enumerate() {
        let dims = gt.dims();
        let expanded = expand_bbox(&bbox_of_mask(gt).unwrap(), cfg.beta, dims);
        let axes_ok = |e: &Ellipsoid| {
            (0..3).all(|k| e.semi_axes[k] >= cfg.min_axis && e.semi_axes[k] <= cfg.alpha * dims[k] as f64)
        };
        for _ in 0..1000 {
            let f = sample_ellipsoid(gt, &cfg, ScribbleClass::Foreground, &mut rng).unwrap();
            ensure(gt.get_at(f.center) && axes_ok(&f), || format!("gt {g}: bad foreground draw {f:?}"))?;
            let b = sample_ellipsoid(gt, &cfg, ScribbleClass::Background, &mut rng).unwrap();
            let ok = !gt.get_at(b.center) && expanded.contains(b.center) && axes_ok(&b);
            ensure(ok, || format!("gt {g}: bad background draw {b:?}"))?;

            let t = simulate_training_annotations_detailed(gt, dims, &cfg, &mut rng).unwrap();
            let counts = (1..=3).contains(&t.foreground.len()) && t.background.len() <= 1;
            ensure(counts, || format!("gt {g}: counts {} / {}", t.foreground.len(), t.background.len()))?;
            let centres = t.foreground.iter().all(|e| gt.get_at(e.center) && axes_ok(e))
                && t.background.iter().all(|e| !gt.get_at(e.center) && expanded.contains(e.center) && axes_ok(e));
            ensure(centres, || format!("gt {g}: bad annotation draw"))?;
        }
    }
    Ok("3 ground truths x 1000 draws per class".into())
}

fn criterion_5() -> Outcome {
    let dims = Dims::new(16, 16, 16);
    let mut rng = SimRng::new(5);
    for case in 0..200 {
        let centre = [4 + rng.below(8) as usize, 4 + rng.below(8) as usize, 4 + rng.below(8) as usize];
        let axes = [2.0 + rng.uniform01() * 3.0, 2.0 + rng.uniform01() * 3.0, 2.0 + rng.uniform01() * 3.0];
        let gt = ellipsoid(dims, centre, axes);
        let flip = rng.uniform01() * 0.3;
        let mask = Mask::from_fn(dims, |p| gt.get_at(p) != (rng.uniform01() < flip));
        let density = rng.uniform01() * 0.5;
        let foreground = Mask::from_fn(dims, |p| gt.get_at(p) && rng.uniform01() < density);
        let background = Mask::from_fn(dims, |p| !gt.get_at(p) && rng.uniform01() < density);
        let s = ScribbleSet { foreground, background };
        let before = dice(&mask, &gt).unwrap();
        let after = dice(&enforce_constraints(&mask, &s).unwrap(), &gt).unwrap();
        ensure(after >= before, || format!("case {case}: {before:.4} -> {after:.4}"))?;
    }
    Ok("200 cases, Dice never decreased".into())
}

fn criterion_6() -> Outcome {
    let cfg = ExperimentConfig::default();
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let (phantom, annotator) = derived_seeds(seed);
        let source = Source::Phantom(PhantomSpec::standard(phantom));
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let started = Instant::now();
        let a = run_interactive_experiment(&source, &cfg, annotator, dirs[0].path()).map_err(|e| e.to_string())?;
        let secs = started.elapsed().as_secs_f64();
        let b = run_interactive_experiment(&source, &cfg, annotator, dirs[1].path()).map_err(|e| e.to_string())?;
        ensure(a.proposal_dice <= 0.6, || format!("seed {seed}: proposal Dice {:.3}", a.proposal_dice))?;
        let reached = a.interactions_to_reach(0.85);
        ensure(reached.is_some_and(|n| n <= 5), || format!("seed {seed}: trajectory {:?}", a.dice_values()))?;
        ensure(secs < 30.0, || format!("seed {seed}: {secs:.1} s"))?;
        ensure(a.dice_values() == b.dice_values(), || format!("seed {seed}: trajectories differ"))?;
        for (x, y) in a.iterations.iter().zip(&b.iterations) {
            let same = load_mask(&x.mask_path).unwrap() == load_mask(&y.mask_path).unwrap();
            ensure(same, || format!("seed {seed}: masks differ at iteration {}", x.iteration))?;
        }
        lines.push(format!("seed {seed}: {:.3}->{:.3} in {}", a.proposal_dice, a.final_dice, reached.unwrap()));
    }
    Ok(lines.join("; "))
}

/// Minimum energy over every labelling of the free nodes.
fn brute_force_minimum(model: &GraphCutModel) -> f64 {
    let free: Vec<usize> = (0..model.node_count()).filter(|&i| model.seeds[i] == Seed::Free).collect();
    let mut labels: Vec<bool> = model.seeds.iter().map(|&s| s == Seed::Foreground).collect();
    let mut best = f64::INFINITY;
    for bits in 0u64..(1 << free.len()) {
        for (k, &i) in free.iter().enumerate() {
            labels[i] = bits >> k & 1 == 1;
        }
        best = best.min(model.energy(&labels));
    }
    best
}

fn criterion_7() -> Outcome {
    let cases = [
        (Dims::new(32, 32, 32), [16, 16, 16], [8.0, 7.0, 6.0], [3, 3, 3]),
        (Dims::new(40, 36, 30), [18, 20, 14], [10.0, 6.0, 5.0], [36, 4, 26]),
        (Dims::new(28, 28, 40), [14, 14, 22], [5.0, 5.0, 12.0], [2, 25, 3]),
    ];
    let mut scores = Vec::new();
    for (c, &(dims, centre, axes, bg_centre)) in cases.iter().enumerate() {
        let region = ellipsoid(dims, centre, axes);
        let a = Volume::from_fn(dims, Spacing::UNIT, |p| if region.get_at(p) { 3.0 } else { 1.0 }).unwrap();
        let pair = ModalityPair::new(a, Volume::filled(dims, Spacing::UNIT, 0.0).unwrap()).unwrap();
        let s = ScribbleSet {
            foreground: ellipsoid(dims, centre, [2.0; 3]),
            background: ellipsoid(dims, bg_centre, [2.0; 3]),
        };
        let out = graphcut_segment(&pair, &s, &Params::new()).map_err(|e| e.to_string())?;
        let d = dice(&out, &region).unwrap();
        ensure(d >= 0.99, || format!("phantom {c}: Dice {d:.4}"))?;
        scores.push(format!("{d:.4}"));
    }

    let mut rng = SimRng::new(7);
    let mut instances = 0;
    for w in 1..=3 {
        for h in 1..=3 {
            for d in 1..=3 {
                let dims = Dims::new(w, h, d);
                if dims.len() < 2 {
                    continue;
                }
                for _ in 0..4 {
                    let a = random_volume(dims, &mut rng);
                    let pair = ModalityPair::new(a, Volume::filled(dims, Spacing::UNIT, 0.0).unwrap()).unwrap();
                    // Enough seeds to keep enumeration at 2^18 labellings at most.
                    let n_seeds = dims.len().saturating_sub(18).max(2);
                    let mut order: Vec<usize> = (0..dims.len()).collect();
                    for i in (1..order.len()).rev() {
                        order.swap(i, rng.below(i as u64 + 1) as usize);
                    }
                    let fg = Mask::from_indices(dims, order[..n_seeds / 2].iter().copied());
                    let bg = Mask::from_indices(dims, order[n_seeds / 2..n_seeds].iter().copied());
                    let params = GraphCutParams {
                        w_pair: rng.uniform01() * 3.0,
                        sigma: 0.05 + rng.uniform01(),
                        ..GraphCutParams::default()
                    };
                    let s = ScribbleSet { foreground: fg, background: bg };
                    let model = GraphCutModel::build(&pair, &s, BoundingBox::full(dims), &params).unwrap();
                    let (labels, _) = model.solve().unwrap();
                    let e = model.energy(&labels);
                    let best = brute_force_minimum(&model);
                    ensure((e - best).abs() <= 1e-9 * best.max(1.0), || {
                        format!("{w}x{h}x{d}: solver energy {e} vs enumerated {best}")
                    })?;
                    instances += 1;
                }
            }
        }
    }
    Ok(format!("Dice {}; {instances} brute-force instances optimal", scores.join(", ")))
}

fn service_fixture(root: &std::path::Path) -> (ServiceConfig, CreateRequest, Mask) {
    let (pair, gt) = generate_phantom(&PhantomSpec::standard(8)).unwrap();
    save_volume(&root.join("ct.nii"), pair.anatomical(), VolumeFormat::Nifti1).unwrap();
    save_volume(&root.join("pet.nii"), pair.functional(), VolumeFormat::Nifti1).unwrap();
    save_mask_nifti(&root.join("gt.nii"), &gt, pair.spacing()).unwrap();
    let exp = ExperimentConfig::default();
    let cfg = ServiceConfig {
        data_root: root.to_path_buf(),
        geodesic: exp.geodesic,
        roi_expansion: exp.roi_expansion,
        ..ServiceConfig::default()
    };
    let req = CreateRequest {
        anatomical_ref: PathBuf::from("ct.nii"),
        functional_ref: PathBuf::from("pet.nii"),
        backend: exp.backend,
        gt_ref: Some(PathBuf::from("gt.nii")),
        params: exp.params,
    };
    (cfg, req, gt)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let body = body.map_or_else(Body::empty, |v| Body::from(v.to_string()));
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body)
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn contract_smoke(cfg: ServiceConfig, req: CreateRequest, gt: Mask) -> Result<(), String> {
    let app = router(AppState::new(cfg, Registry::with_builtins()));
    let expect = |what: &str, got: StatusCode, want: StatusCode| {
        ensure(got == want, || format!("{what}: status {got}, expected {want}"))
    };
    let (st, _) = call(&app, "GET", "/backends", None).await;
    expect("list backends", st, StatusCode::OK)?;
    let (st, body) = call(&app, "POST", "/sessions", Some(serde_json::to_value(&req).unwrap())).await;
    expect("create", st, StatusCode::CREATED)?;
    let created: Value = serde_json::from_slice(&body).unwrap();
    let id = created["id"].as_str().ok_or("no id")?.to_string();
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/propose"), None).await;
    expect("propose", st, StatusCode::OK)?;
    let delta = ScribbleSet {
        foreground: ellipsoid(gt.dims(), [24, 22, 25], [2.0; 3]),
        background: ellipsoid(gt.dims(), [4, 4, 4], [2.0; 3]),
    };
    let payload = serde_json::to_value(ScribblePayload::from_set(&delta)).unwrap();
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/scribbles"), Some(payload)).await;
    expect("scribbles", st, StatusCode::OK)?;
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/refine"), None).await;
    expect("refine", st, StatusCode::OK)?;
    let (st, png) = call(&app, "GET", &format!("/sessions/{id}/slice?axis=z&index=25&modality=mask"), None).await;
    expect("slice", st, StatusCode::OK)?;
    ensure(png.starts_with(b"\x89PNG"), || "slice is not a PNG".into())?;
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/submit"), None).await;
    expect("submit", st, StatusCode::OK)?;
    let (st, _) = call(&app, "POST", &format!("/sessions/{id}/refine"), None).await;
    expect("refine after submit", st, StatusCode::CONFLICT)?;
    let (st, _) = call(&app, "GET", "/sessions/does-not-exist", None).await;
    expect("unknown session", st, StatusCode::NOT_FOUND)?;
    let (st, _) = call(&app, "POST", "/sessions", Some(json!({"anatomical_ref": "ct.nii"}))).await;
    ensure(st.is_client_error(), || format!("malformed create: status {st}"))
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, req, gt) = service_fixture(dir.path());
    let registry = Registry::with_builtins();
    let sessions = cfg.sessions_dir();
    let mut session = Session::create("acceptance", &req, &cfg, &registry, &sessions).map_err(|e| e.to_string())?;
    let mut rng = SimRng::new(8);
    session.propose(&registry).map_err(|e| e.to_string())?;
    for round in 0..4 {
        let delta = corrective_annotator_step(&gt, session.current_mask(), &SimulationConfig::default(), &mut rng)
            .map_err(|e| e.to_string())?;
        session.add_scribbles(&delta).map_err(|e| e.to_string())?;
        if round != 2 {
            session.refine(&registry).map_err(|e| e.to_string())?;
        }
    }
    session.submit().map_err(|e| e.to_string())?;
    let log = session.log_path().ok_or("session has no log")?.to_path_buf();
    let events = read_log(&log).map_err(|e| e.to_string())?.len();
    ensure(events == 10, || format!("log has {events} events"))?;
    let outcome = replay_log(&log).map_err(|e| e.to_string())?;
    ensure(outcome.matches_recorded == Some(true), || "replay differs from the recorded mask".into())?;
    ensure(&outcome.mask == session.current_mask(), || "replay differs from the live session".into())?;

    let contract_dir = tempfile::tempdir().unwrap();
    let (cfg, req, gt) = service_fixture(contract_dir.path());
    let rt = tokio::runtime::Runtime::new().unwrap();
    rt.block_on(contract_smoke(cfg, req, gt))?;
    Ok(format!("{events}-event log replayed bit-exactly; HTTP contract smoke passed"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("RoI GDT speedup", criterion_1),
        ("RoI GDT fidelity", criterion_2),
        ("raster-scan accuracy", criterion_3),
        ("annotation sampler soundness", criterion_4),
        ("constraint monotonicity", criterion_5),
        ("end-to-end refinement", criterion_6),
        ("graph-cut backend", criterion_7),
        ("service determinism", criterion_8),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} PASS ({name}, {secs:.1} s): {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL ({name}, {secs:.1} s): {detail}", n + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
