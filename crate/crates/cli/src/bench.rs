//! Full-volume versus RoI-restricted geodesic transform timings.

use std::time::Instant;

use geoseg_core::geodesic::{gdt_exact, gdt_full, gdt_roi, GeodesicConfig, DEFAULT_OUTSIDE_VALUE};
use geoseg_core::rng::SimRng;
use geoseg_core::{BoundingBox, Dims, Mask, Spacing, Volume};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Largest volume for which the exact oracle is run.
pub const ORACLE_MAX_VOXELS: usize = 64 * 64 * 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dims: String,
    pub roi_fraction: f64,
    pub roi_voxels: usize,
    pub t_full_ms: f64,
    pub t_roi_ms: f64,
    pub speedup: f64,
    pub mean_rel_err_vs_oracle: Option<f64>,
    pub in_roi_mean_abs_diff: f64,
}

/// Uniform random intensities in [0, 1).
pub fn random_volume(dims: Dims, rng: &mut SimRng) -> Volume {
    let data = (0..dims.len()).map(|_| rng.uniform01() as f32).collect();
    Volume::new(dims, Spacing::UNIT, data).expect("data length matches dims")
}

/// Centred box whose voxel count is about `fraction` of the volume: each
/// side is scaled by `fraction^(1/3)`.
pub fn centered_roi(dims: Dims, fraction: f64) -> BoundingBox {
    let scale = fraction.cbrt();
    let mut min = [0; 3];
    let mut max = [0; 3];
    for k in 0..3 {
        let side = ((dims[k] as f64 * scale).round() as usize).clamp(1, dims[k]);
        min[k] = (dims[k] - side) / 2;
        max[k] = min[k] + side;
    }
    BoundingBox::new(min, max).expect("every side is at least one voxel")
}

/// A 3×3×3 seed block (clipped) at the centre of `roi`.
pub fn center_seeds(dims: Dims, roi: &BoundingBox) -> Mask {
    let c: Vec<usize> = (0..3).map(|k| (roi.min[k] + roi.max[k] - 1) / 2).collect();
    Mask::from_fn(dims, |p| {
        (0..3).all(|k| p[k].abs_diff(c[k]) <= 1 && roi.min[k] <= p[k] && p[k] < roi.max[k])
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Mean of `|approx - exact| / exact` over voxels with `exact > 0`.
pub fn mean_relative_error(approx: &[f32], exact: &[f32]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (&a, &e) in approx.iter().zip(exact) {
        if e > 0.0 {
            sum += ((a - e).abs() / e) as f64;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Times `gdt_full` and `gdt_roi` on `image` (median of `repetitions` runs
/// each, run sequentially).
pub fn bench_volume(
    image: &Volume,
    roi_fraction: f64,
    cfg: &GeodesicConfig,
    repetitions: usize,
) -> Result<BenchRow, CliError> {
    if !(roi_fraction > 0.0 && roi_fraction <= 1.0) {
        return Err(CliError::Usage(format!("roi fraction {roi_fraction} is not in (0, 1]")));
    }
    if repetitions == 0 {
        return Err(CliError::Usage("repetitions must be >= 1".into()));
    }
    let dims = image.dims();
    let roi = centered_roi(dims, roi_fraction);
    let seeds = center_seeds(dims, &roi);

    let mut t_full = Vec::with_capacity(repetitions);
    let mut t_roi = Vec::with_capacity(repetitions);
    let mut full = None;
    let mut part = None;
    for _ in 0..repetitions {
        let t = Instant::now();
        full = Some(gdt_full(image, &seeds, cfg)?);
        t_full.push(t.elapsed().as_secs_f64() * 1e3);
        let t = Instant::now();
        part = Some(gdt_roi(image, &seeds, cfg, &roi, DEFAULT_OUTSIDE_VALUE)?);
        t_roi.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let (full, part) = (full.unwrap(), part.unwrap());

    let mut diff = 0.0;
    for i in roi.indices(dims) {
        diff += (full.values()[i] - part.values()[i]).abs() as f64;
    }
    let in_roi_mean_abs_diff = diff / roi.voxel_count() as f64;

    let mean_rel_err_vs_oracle = if dims.len() <= ORACLE_MAX_VOXELS {
        let exact = gdt_exact(image, &seeds, cfg)?;
        Some(mean_relative_error(full.values(), exact.values()))
    } else {
        None
    };

    let (t_full_ms, t_roi_ms) = (median(t_full), median(t_roi));
    Ok(BenchRow {
        dims: format!("{}x{}x{}", dims[0], dims[1], dims[2]),
        roi_fraction,
        roi_voxels: roi.voxel_count(),
        t_full_ms,
        t_roi_ms,
        speedup: t_full_ms / t_roi_ms.max(1e-9),
        mean_rel_err_vs_oracle,
        in_roi_mean_abs_diff,
    })
}

/// [`bench_volume`] on a random volume drawn from `seed`.
pub fn bench_gdt(
    dims: Dims,
    roi_fraction: f64,
    cfg: &GeodesicConfig,
    repetitions: usize,
    seed: u64,
) -> Result<BenchRow, CliError> {
    let image = random_volume(dims, &mut SimRng::new(seed));
    bench_volume(&image, roi_fraction, cfg, repetitions)
}

pub fn write_csv(path: &std::path::Path, rows: &[BenchRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roi_of_one_sixty_fourth_is_a_quarter_side() {
        let roi = centered_roi(Dims::new(256, 256, 256), 1.0 / 64.0);
        assert_eq!(roi.extent(), [64, 64, 64]);
        assert_eq!(roi.min, [96, 96, 96]);
        assert_eq!(centered_roi(Dims::new(5, 6, 7), 1.0), BoundingBox::full(Dims::new(5, 6, 7)));
    }

    #[test]
    fn seeds_sit_inside_the_roi() {
        let d = Dims::new(10, 10, 10);
        let roi = centered_roi(d, 0.1);
        let s = center_seeds(d, &roi);
        assert!(!s.is_empty());
        assert!(s.indices().all(|i| roi.contains(d.coords(i))));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn bad_fraction_is_rejected() {
        assert!(bench_gdt(Dims::new(4, 4, 4), 0.0, &GeodesicConfig::default(), 1, 0).is_err());
        assert!(bench_gdt(Dims::new(4, 4, 4), 1.5, &GeodesicConfig::default(), 1, 0).is_err());
    }
}
