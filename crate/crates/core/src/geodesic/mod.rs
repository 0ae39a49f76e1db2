//! Geodesic distance transforms on voxel grids.
//!
//! The step cost between neighbouring voxels `u`, `v` is
//! `sqrt(|Δx|² + λ²·ΔI²)`, where `|Δx|` is the physical step length and `ΔI`
//! the difference of min-max normalised intensities. [`gdt_full`] and
//! [`gdt_roi`] approximate the minimum path cost to the seed set with
//! alternating forward/backward raster sweeps; [`gdt_exact`] solves the same
//! graph problem exactly with a priority queue and serves as the oracle.

mod exact;
mod raster;

pub use exact::gdt_exact;

use serde::{Deserialize, Serialize};

use crate::bbox::{bbox_of_mask, expand_bbox, BoundingBox};
use crate::error::{Error, Result};
use crate::volume::{Dims, Mask, Spacing, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Neighborhood {
    Six,
    TwentySix,
}

impl TryFrom<u8> for Neighborhood {
    type Error = String;
    fn try_from(n: u8) -> Result<Self, String> {
        match n {
            6 => Ok(Neighborhood::Six),
            26 => Ok(Neighborhood::TwentySix),
            other => Err(format!("neighborhood must be 6 or 26, got {other}")),
        }
    }
}

impl From<Neighborhood> for u8 {
    fn from(n: Neighborhood) -> u8 {
        match n {
            Neighborhood::Six => 6,
            Neighborhood::TwentySix => 26,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeodesicConfig {
    /// Weight of the intensity term relative to physical distance.
    pub lambda: f32,
    /// Number of forward+backward sweep pairs.
    pub passes: u32,
    pub neighborhood: Neighborhood,
    /// Min-max normalise intensities over the computed region first.
    pub normalize: bool,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            lambda: 1.0,
            passes: 4,
            neighborhood: Neighborhood::TwentySix,
            normalize: true,
        }
    }
}

impl GeodesicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(Error::InvalidConfig("passes must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda = {}", self.lambda)));
        }
        Ok(())
    }
}

/// Fill value beyond the computed region unless the caller overrides it.
pub const DEFAULT_OUTSIDE_VALUE: f32 = f32::MAX;

/// Geodesic distances, optionally only valid inside `roi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    pub map: Volume,
    pub roi: Option<BoundingBox>,
    pub outside_value: f32,
}

impl DistanceMap {
    pub fn values(&self) -> &[f32] {
        self.map.data()
    }

    pub fn dims(&self) -> Dims {
        self.map.dims()
    }
}

/// Work counters reported by the sweep kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub sweeps: u32,
    pub voxel_visits: u64,
}

/// Shared step cost. Both the raster kernel and the exact oracle call this,
/// so the two agree bit-for-bit on every edge.
#[inline(always)]
pub(crate) fn step_cost(spatial_sq: f32, lambda_sq: f32, di: f32) -> f32 {
    (spatial_sq + lambda_sq * (di * di)).sqrt()
}

/// A neighbour displacement and its squared physical length.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Offset {
    pub d: [isize; 3],
    pub spatial_sq: f32,
}

/// Neighbours that precede a voxel in x-fastest raster order.
pub(crate) fn causal_offsets(nb: Neighborhood, spacing: Spacing) -> Vec<Offset> {
    let sp = spacing.0;
    let mut out = Vec::new();
    for dz in -1isize..=0 {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let d = [dx, dy, dz];
                // Strictly earlier in raster order.
                let earlier = dz < 0 || (dz == 0 && (dy < 0 || (dy == 0 && dx < 0)));
                if !earlier {
                    continue;
                }
                let manhattan = dx.abs() + dy.abs() + dz.abs();
                if nb == Neighborhood::Six && manhattan != 1 {
                    continue;
                }
                let spatial_sq = (0..3)
                    .map(|k| {
                        let l = (d[k] as f64 * sp[k]) as f32;
                        l * l
                    })
                    .sum::<f32>();
                out.push(Offset { d, spatial_sq });
            }
        }
    }
    out
}

/// Intensities inside `roi` in roi-local x-fastest order, min-max normalised
/// to [0, 1] when `normalize` is set. A flat region maps to 0.
pub(crate) fn region_intensities(image: &Volume, roi: &BoundingBox, normalize: bool) -> Vec<f32> {
    let dims = image.dims();
    let data = image.data();
    if !normalize {
        return roi.indices(dims).map(|i| data[i]).collect();
    }
    let (lo, hi) = roi
        .indices(dims)
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), i| {
            (lo.min(data[i]), hi.max(data[i]))
        });
    let range = hi - lo;
    roi.indices(dims)
        .map(|i| if range > 0.0 { (data[i] - lo) / range } else { 0.0 })
        .collect()
}

fn check_inputs(image: &Volume, seeds: &Mask, cfg: &GeodesicConfig) -> Result<()> {
    cfg.validate()?;
    seeds.ensure_same_dims(image.dims())?;
    Ok(())
}

/// Raster-scan transform over the whole volume.
pub fn gdt_full(image: &Volume, seeds: &Mask, cfg: &GeodesicConfig) -> Result<DistanceMap> {
    gdt_full_with_stats(image, seeds, cfg).map(|(m, _)| m)
}

pub fn gdt_full_with_stats(
    image: &Volume,
    seeds: &Mask,
    cfg: &GeodesicConfig,
) -> Result<(DistanceMap, SweepStats)> {
    check_inputs(image, seeds, cfg)?;
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    let roi = BoundingBox::full(image.dims());
    let (values, stats) = raster::sweep_region(image, seeds, cfg, &roi);
    let map = Volume::from_parts_unchecked(image.dims(), image.spacing(), values);
    Ok((
        DistanceMap {
            map,
            roi: None,
            outside_value: DEFAULT_OUTSIDE_VALUE,
        },
        stats,
    ))
}

/// Raster-scan transform restricted to `roi`; every voxel outside is set to
/// `outside_value`. All seeds must lie inside `roi`.
pub fn gdt_roi(
    image: &Volume,
    seeds: &Mask,
    cfg: &GeodesicConfig,
    roi: &BoundingBox,
    outside_value: f32,
) -> Result<DistanceMap> {
    gdt_roi_with_stats(image, seeds, cfg, roi, outside_value).map(|(m, _)| m)
}

pub fn gdt_roi_with_stats(
    image: &Volume,
    seeds: &Mask,
    cfg: &GeodesicConfig,
    roi: &BoundingBox,
    outside_value: f32,
) -> Result<(DistanceMap, SweepStats)> {
    check_inputs(image, seeds, cfg)?;
    let dims = image.dims();
    if !roi.fits_in(dims) {
        return Err(Error::InvalidRoi(format!(
            "{:?}..{:?} does not fit {:?}",
            roi.min, roi.max, dims.0
        )));
    }
    if !(outside_value >= 0.0 && outside_value.is_finite()) {
        return Err(Error::InvalidConfig(format!("outside_value = {outside_value}")));
    }
    let mut any = false;
    for i in seeds.indices() {
        let p = dims.coords(i);
        if !roi.contains(p) {
            return Err(Error::SeedOutsideRoi(p));
        }
        any = true;
    }
    if !any {
        return Err(Error::EmptySeeds);
    }

    let (local, stats) = raster::sweep_region(image, seeds, cfg, roi);
    let values = if roi.is_full(dims) {
        local
    } else {
        let mut values = vec![outside_value; dims.len()];
        for (dst, v) in roi.indices(dims).zip(local) {
            values[dst] = v;
        }
        values
    };
    Ok((
        DistanceMap {
            map: Volume::from_parts_unchecked(dims, image.spacing(), values),
            roi: Some(*roi),
            outside_value,
        },
        stats,
    ))
}

/// Box around the seeds (or around `fallback` when there are none), scaled
/// by `expansion` and clipped to `dims`.
pub fn determine_roi(
    seeds: &Mask,
    fallback: Option<&Mask>,
    expansion: f64,
    dims: Dims,
) -> Result<BoundingBox> {
    seeds.ensure_same_dims(dims)?;
    let tight = match bbox_of_mask(seeds) {
        Ok(b) => b,
        Err(Error::EmptyMask) => match fallback {
            Some(f) => {
                f.ensure_same_dims(dims)?;
                bbox_of_mask(f).map_err(|_| Error::EmptySeeds)?
            }
            None => return Err(Error::EmptySeeds),
        },
        Err(e) => return Err(e),
    };
    Ok(expand_bbox(&tight, expansion.max(1.0), dims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Spacing;

    fn line(values: &[f32]) -> Volume {
        Volume::new(Dims::new(1, 1, values.len()), Spacing::UNIT, values.to_vec()).unwrap()
    }

    fn seed_at(dims: Dims, p: [usize; 3]) -> Mask {
        Mask::from_indices(dims, [dims.index_of(p)])
    }

    #[test]
    fn causal_offset_counts() {
        assert_eq!(causal_offsets(Neighborhood::Six, Spacing::UNIT).len(), 3);
        assert_eq!(causal_offsets(Neighborhood::TwentySix, Spacing::UNIT).len(), 13);
    }

    #[test]
    fn constant_line_is_chamfer() {
        let img = line(&[5.0; 8]);
        let seeds = seed_at(img.dims(), [0, 0, 0]);
        for nb in [Neighborhood::Six, Neighborhood::TwentySix] {
            let cfg = GeodesicConfig {
                lambda: 3.0,
                passes: 1,
                neighborhood: nb,
                normalize: true,
            };
            let d = gdt_full(&img, &seeds, &cfg).unwrap();
            assert_eq!(d.values(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        }
    }

    #[test]
    fn all_seeds_gives_zero_map() {
        let img = Volume::from_fn(Dims::new(3, 3, 3), Spacing::UNIT, |p| p[0] as f32).unwrap();
        let d = gdt_full(&img, &Mask::full(img.dims()), &GeodesicConfig::default()).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ramp_line_matches_hand_dijkstra() {
        let img = line(&[0.0, 1.0, 2.0, 3.0]);
        let seeds = seed_at(img.dims(), [0, 0, 0]);
        let raw = GeodesicConfig {
            lambda: 1.0,
            passes: 1,
            neighborhood: Neighborhood::Six,
            normalize: false,
        };
        let d = gdt_full(&img, &seeds, &raw).unwrap();
        let expected = [0.0, 2f64.sqrt(), 2.0 * 2f64.sqrt(), 3.0 * 2f64.sqrt()];
        for (&v, e) in d.values().iter().zip(expected) {
            assert!((v as f64 - e).abs() < 1e-5, "{v} vs {e}");
        }
        assert_eq!(gdt_exact(&img, &seeds, &raw).unwrap().map, d.map);

        // Normalised intensities step by 1/3.
        let d = gdt_full(&img, &seeds, &GeodesicConfig { normalize: true, ..raw }).unwrap();
        let step = (1.0f64 + 1.0 / 9.0).sqrt();
        for (k, &v) in d.values().iter().enumerate() {
            assert!((v as f64 - k as f64 * step).abs() < 1e-5, "{k}: {v}");
        }
    }

    #[test]
    fn errors() {
        let img = line(&[0.0; 4]);
        let cfg = GeodesicConfig::default();
        assert!(matches!(
            gdt_full(&img, &Mask::empty(img.dims()), &cfg),
            Err(Error::EmptySeeds)
        ));
        assert!(matches!(
            gdt_full(&img, &Mask::empty(Dims::new(2, 2, 1)), &cfg),
            Err(Error::DimsMismatch { .. })
        ));
        let seeds = seed_at(img.dims(), [0, 0, 3]);
        let roi = BoundingBox::new([0, 0, 0], [1, 1, 2]).unwrap();
        assert!(matches!(
            gdt_roi(&img, &seeds, &cfg, &roi, 1e9),
            Err(Error::SeedOutsideRoi([0, 0, 3]))
        ));
        let bad = BoundingBox { min: [0, 0, 0], max: [1, 1, 9] };
        assert!(matches!(
            gdt_roi(&img, &seeds, &cfg, &bad, 1e9),
            Err(Error::InvalidRoi(_))
        ));
        let zero_pass = GeodesicConfig { passes: 0, ..cfg };
        assert!(gdt_full(&img, &seeds, &zero_pass).is_err());
    }

    #[test]
    fn roi_full_volume_is_bit_identical() {
        let dims = Dims::new(7, 6, 5);
        let img = Volume::from_fn(dims, Spacing([1.0, 0.8, 2.0]), |p| {
            ((p[0] * 31 + p[1] * 17 + p[2] * 7) % 11) as f32
        })
        .unwrap();
        let seeds = seed_at(dims, [2, 3, 1]);
        let cfg = GeodesicConfig::default();
        let full = gdt_full(&img, &seeds, &cfg).unwrap();
        let roi = gdt_roi(&img, &seeds, &cfg, &BoundingBox::full(dims), 1e9).unwrap();
        assert_eq!(full.map, roi.map);
    }

    #[test]
    fn roi_fills_outside_and_counts_only_roi_voxels() {
        let dims = Dims::new(16, 16, 16);
        let img = Volume::filled(dims, Spacing::UNIT, 1.0).unwrap();
        let seeds = seed_at(dims, [8, 8, 8]);
        let roi = BoundingBox::new([6, 6, 6], [10, 10, 10]).unwrap();
        let cfg = GeodesicConfig::default();
        let (m, stats) = gdt_roi_with_stats(&img, &seeds, &cfg, &roi, 1e9).unwrap();
        for i in 0..dims.len() {
            if !roi.contains(dims.coords(i)) {
                assert_eq!(m.values()[i], 1e9);
            }
        }
        assert_eq!(stats.sweeps, 2 * cfg.passes);
        assert_eq!(stats.voxel_visits, 2 * cfg.passes as u64 * 64);
        let (_, full_stats) = gdt_full_with_stats(&img, &seeds, &cfg).unwrap();
        assert_eq!(full_stats.voxel_visits, 2 * cfg.passes as u64 * 4096);
    }

    #[test]
    fn determine_roi_examples() {
        let dims = Dims::new(100, 100, 100);
        let mut seeds = Mask::empty(dims);
        for p in [[10, 10, 10], [19, 19, 19]] {
            seeds.set(dims.index_of(p), true);
        }
        let b = determine_roi(&seeds, None, 2.0, dims).unwrap();
        assert_eq!((b.min, b.max), ([5, 5, 5], [25, 25, 25]));

        let one = seed_at(dims, [50, 50, 50]);
        let b = determine_roi(&one, None, 2.0, dims).unwrap();
        assert!(b.contains([50, 50, 50]));
        assert_eq!(b.extent(), [3, 3, 3]);

        let small = Dims::new(8, 8, 8);
        let b = determine_roi(&Mask::full(small), None, 4.0, small).unwrap();
        assert_eq!(b, BoundingBox::full(small));

        let empty = Mask::empty(small);
        let fb = seed_at(small, [1, 1, 1]);
        assert!(determine_roi(&empty, Some(&fb), 1.0, small).unwrap().contains([1, 1, 1]));
        assert!(matches!(
            determine_roi(&empty, Some(&empty), 1.0, small),
            Err(Error::EmptySeeds)
        ));
    }
}
