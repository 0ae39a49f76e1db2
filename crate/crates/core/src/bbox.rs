//! Axis-aligned voxel boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Dims, Mask};

/// Half-open voxel box: `min` inclusive, `max` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl BoundingBox {
    pub fn new(min: [usize; 3], max: [usize; 3]) -> Result<Self> {
        if (0..3).any(|k| min[k] >= max[k]) {
            return Err(Error::InvalidRoi(format!("degenerate box {min:?}..{max:?}")));
        }
        Ok(BoundingBox { min, max })
    }

    pub fn full(dims: Dims) -> Self {
        BoundingBox {
            min: [0; 3],
            max: dims.0,
        }
    }

    pub fn extent(&self) -> [usize; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn voxel_count(&self) -> usize {
        self.extent().iter().product()
    }

    pub fn contains(&self, p: [usize; 3]) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] < self.max[k])
    }

    pub fn fits_in(&self, dims: Dims) -> bool {
        (0..3).all(|k| self.min[k] < self.max[k] && self.max[k] <= dims[k])
    }

    pub fn is_full(&self, dims: Dims) -> bool {
        *self == BoundingBox::full(dims)
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            min: std::array::from_fn(|k| self.min[k].min(other.min[k])),
            max: std::array::from_fn(|k| self.max[k].max(other.max[k])),
        }
    }

    /// Linear indices (in `dims`) of every voxel inside the box, x-fastest.
    pub fn indices(&self, dims: Dims) -> impl Iterator<Item = usize> + '_ {
        let [x0, y0, z0] = self.min;
        let [x1, y1, z1] = self.max;
        (z0..z1).flat_map(move |z| {
            (y0..y1).flat_map(move |y| (x0..x1).map(move |x| dims.index(x, y, z)))
        })
    }
}

/// Tightest box containing every set voxel.
pub fn bbox_of_mask(mask: &Mask) -> Result<BoundingBox> {
    let dims = mask.dims();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for i in mask.indices() {
        let p = dims.coords(i);
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k] + 1);
        }
        any = true;
    }
    if !any {
        return Err(Error::EmptyMask);
    }
    Ok(BoundingBox { min: lo, max: hi })
}

/// Scales every side by `factor` about the box centre, rounds outward and
/// clips to `dims`.
pub fn expand_bbox(bbox: &BoundingBox, factor: f64, dims: Dims) -> BoundingBox {
    // Absorbs float noise so exact integer bounds don't round outward.
    const EPS: f64 = 1e-9;
    let mut out = *bbox;
    for k in 0..3 {
        let lo = bbox.min[k] as f64;
        let hi = bbox.max[k] as f64;
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo) * factor;
        let new_lo = (center - half + EPS).floor().max(0.0) as usize;
        let new_hi = ((center + half - EPS).ceil() as usize).min(dims[k]);
        out.min[k] = new_lo.min(bbox.min[k]);
        out.max[k] = new_hi.max(bbox.max[k].min(dims[k]));
    }
    out
}
