use crate::bbox::BoundingBox;
use crate::volume::{Mask, Volume};

use super::{causal_offsets, region_intensities, step_cost, GeodesicConfig, SweepStats};

struct LocalOffset {
    d: [isize; 3],
    linear: isize,
    spatial_sq: f32,
}

/// Runs `cfg.passes` forward/backward sweep pairs over the voxels of `roi`
/// and returns the distances in roi-local x-fastest order.
pub(super) fn sweep_region(
    image: &Volume,
    seeds: &Mask,
    cfg: &GeodesicConfig,
    roi: &BoundingBox,
) -> (Vec<f32>, SweepStats) {
    let dims = image.dims();
    let [w, h, d] = roi.extent();
    let n = w * h * d;
    let intensity = region_intensities(image, roi, cfg.normalize);
    let mut dist: Vec<f32> = roi
        .indices(dims)
        .map(|i| if seeds.get(i) { 0.0 } else { f32::INFINITY })
        .collect();

    let forward: Vec<LocalOffset> = causal_offsets(cfg.neighborhood, image.spacing())
        .into_iter()
        .map(|o| LocalOffset {
            d: o.d,
            linear: o.d[0] + w as isize * (o.d[1] + h as isize * o.d[2]),
            spatial_sq: o.spatial_sq,
        })
        .collect();
    let backward: Vec<LocalOffset> = forward
        .iter()
        .map(|o| LocalOffset {
            d: [-o.d[0], -o.d[1], -o.d[2]],
            linear: -o.linear,
            spatial_sq: o.spatial_sq,
        })
        .collect();
    let lambda_sq = cfg.lambda * cfg.lambda;

    let mut stats = SweepStats::default();
    for _ in 0..cfg.passes {
        for (offsets, reverse) in [(&forward, false), (&backward, true)] {
            stats.sweeps += 1;
            for zz in 0..d {
                let z = if reverse { d - 1 - zz } else { zz };
                for yy in 0..h {
                    let y = if reverse { h - 1 - yy } else { yy };
                    stats.voxel_visits += w as u64;
                    for xx in 0..w {
                        let x = if reverse { w - 1 - xx } else { xx };
                        let i = x + w * (y + h * z);
                        let mut best = dist[i];
                        if best == 0.0 {
                            continue;
                        }
                        let here = intensity[i];
                        for o in offsets.iter() {
                            let nx = x.wrapping_add_signed(o.d[0]);
                            let ny = y.wrapping_add_signed(o.d[1]);
                            let nz = z.wrapping_add_signed(o.d[2]);
                            if nx >= w || ny >= h || nz >= d {
                                continue;
                            }
                            let j = i.wrapping_add_signed(o.linear);
                            let cand = dist[j] + step_cost(o.spatial_sq, lambda_sq, here - intensity[j]);
                            if cand < best {
                                best = cand;
                            }
                        }
                        dist[i] = best;
                    }
                }
            }
        }
    }
    debug_assert_eq!(dist.len(), n);
    (dist, stats)
}
