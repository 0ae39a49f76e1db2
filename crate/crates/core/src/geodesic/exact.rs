use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::bbox::BoundingBox;
use crate::error::{Error, Result};
use crate::volume::{Mask, Volume};

use super::{
    causal_offsets, check_inputs, region_intensities, step_cost, DistanceMap, GeodesicConfig,
    DEFAULT_OUTSIDE_VALUE,
};

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f32,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact multi-source shortest paths on the voxel graph, with the same edge
/// costs as the raster transforms. Intended for volumes up to roughly 64³.
pub fn gdt_exact(image: &Volume, seeds: &Mask, cfg: &GeodesicConfig) -> Result<DistanceMap> {
    check_inputs(image, seeds, cfg)?;
    let dims = image.dims();
    let [w, h, d] = dims.0;
    let intensity = region_intensities(image, &BoundingBox::full(dims), cfg.normalize);
    let lambda_sq = cfg.lambda * cfg.lambda;

    let half = causal_offsets(cfg.neighborhood, image.spacing());
    let offsets: Vec<_> = half
        .iter()
        .flat_map(|o| {
            let neg = [-o.d[0], -o.d[1], -o.d[2]];
            [(o.d, o.spatial_sq), (neg, o.spatial_sq)]
        })
        .collect();

    let mut dist = vec![f32::INFINITY; dims.len()];
    let mut heap = BinaryHeap::new();
    for i in seeds.indices() {
        dist[i] = 0.0;
        heap.push(Entry { dist: 0.0, index: i });
    }
    if heap.is_empty() {
        return Err(Error::EmptySeeds);
    }

    while let Some(Entry { dist: du, index: u }) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        let [x, y, z] = dims.coords(u);
        for &(o, spatial_sq) in &offsets {
            let nx = x.wrapping_add_signed(o[0]);
            let ny = y.wrapping_add_signed(o[1]);
            let nz = z.wrapping_add_signed(o[2]);
            if nx >= w || ny >= h || nz >= d {
                continue;
            }
            let v = dims.index(nx, ny, nz);
            let cand = du + step_cost(spatial_sq, lambda_sq, intensity[v] - intensity[u]);
            if cand < dist[v] {
                dist[v] = cand;
                heap.push(Entry { dist: cand, index: v });
            }
        }
    }

    Ok(DistanceMap {
        map: Volume::from_parts_unchecked(dims, image.spacing(), dist),
        roi: None,
        outside_value: DEFAULT_OUTSIDE_VALUE,
    })
}
