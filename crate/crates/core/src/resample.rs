//! Trilinear resampling between voxel grids that share an origin.

use crate::error::{Error, Result};
use crate::volume::{Dims, Spacing, Volume};

/// Per-axis lookup: lower source index, upper source index and weight of the upper.
fn axis_taps(src_n: usize, src_sp: f64, dst_n: usize, dst_sp: f64) -> Vec<(usize, usize, f32)> {
    (0..dst_n)
        .map(|i| {
            let pos = (i as f64 * dst_sp / src_sp).clamp(0.0, (src_n - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src_n - 1);
            (lo, hi, (pos - lo as f64) as f32)
        })
        .collect()
}

/// Samples `src` at the centres of a new grid. Voxel (0,0,0) of both grids
/// coincide; positions past the last source voxel take the edge value.
pub fn resample_to_grid(src: &Volume, dims: Dims, spacing: Spacing) -> Result<Volume> {
    if dims.0.contains(&0) || spacing.0.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidVolume(format!(
            "invalid target grid {:?} / {:?}",
            dims.0, spacing.0
        )));
    }
    let sd = src.dims();
    let ss = src.spacing();
    if sd == dims && ss == spacing {
        return Ok(src.clone());
    }
    let taps: [Vec<_>; 3] =
        std::array::from_fn(|k| axis_taps(sd[k], ss.0[k], dims[k], spacing.0[k]));
    let data = src.data();
    let mut out = Vec::with_capacity(dims.len());
    for &(z0, z1, wz) in &taps[2] {
        for &(y0, y1, wy) in &taps[1] {
            for &(x0, x1, wx) in &taps[0] {
                let at = |x, y, z| data[sd.index(x, y, z)];
                let lerp = |a: f32, b: f32, t: f32| (a + (b - a) * t).clamp(a.min(b), a.max(b));
                let c00 = lerp(at(x0, y0, z0), at(x1, y0, z0), wx);
                let c10 = lerp(at(x0, y1, z0), at(x1, y1, z0), wx);
                let c01 = lerp(at(x0, y0, z1), at(x1, y0, z1), wx);
                let c11 = lerp(at(x0, y1, z1), at(x1, y1, z1), wx);
                let c0 = lerp(c00, c10, wy);
                let c1 = lerp(c01, c11, wy);
                out.push(lerp(c0, c1, wz));
            }
        }
    }
    Volume::new(dims, spacing, out)
}
