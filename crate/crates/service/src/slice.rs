//! 8-bit windowed slice images.

use geoseg_core::{Mask, Volume};
use serde::Deserialize;

use crate::error::{ServiceError, ServiceResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    #[default]
    Anatomical,
    Functional,
    Mask,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SliceQuery {
    pub axis: Axis,
    pub index: usize,
    #[serde(default)]
    pub modality: Modality,
    pub window_center: Option<f32>,
    pub window_width: Option<f32>,
}

/// An 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// In-plane axes for a slice normal to `axis`: (columns, rows).
fn plane_axes(axis: Axis) -> (usize, usize) {
    match axis {
        Axis::X => (1, 2),
        Axis::Y => (0, 2),
        Axis::Z => (0, 1),
    }
}

fn extract(dims: [usize; 3], axis: Axis, index: usize, mut f: impl FnMut([usize; 3]) -> u8) -> ServiceResult<Slice> {
    let a = axis.index();
    if index >= dims[a] {
        return Err(ServiceError::BadRequest(format!(
            "slice index {index} out of range for axis of length {}",
            dims[a]
        )));
    }
    let (cu, cv) = plane_axes(axis);
    let (width, height) = (dims[cu], dims[cv]);
    let mut pixels = Vec::with_capacity(width * height);
    for v in 0..height {
        for u in 0..width {
            let mut p = [0; 3];
            p[a] = index;
            p[cu] = u;
            p[cv] = v;
            pixels.push(f(p));
        }
    }
    Ok(Slice { width, height, pixels })
}

/// Maps `[center - width/2, center + width/2]` linearly onto `0..=255`.
/// Without an explicit window the volume's full range is used.
pub fn volume_slice(
    vol: &Volume,
    axis: Axis,
    index: usize,
    window_center: Option<f32>,
    window_width: Option<f32>,
) -> ServiceResult<Slice> {
    let (lo, hi) = match (window_center, window_width) {
        (Some(c), Some(w)) if w > 0.0 => (c - w / 2.0, c + w / 2.0),
        (None, None) => vol.min_max(),
        _ => return Err(ServiceError::BadRequest("window needs center and a positive width".into())),
    };
    let span = hi - lo;
    extract(vol.dims().0, axis, index, |p| {
        let v = vol.get(p);
        if span <= 0.0 {
            return 0;
        }
        (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8
    })
}

pub fn mask_slice(mask: &Mask, axis: Axis, index: usize) -> ServiceResult<Slice> {
    extract(mask.dims().0, axis, index, |p| if mask.get_at(p) { 255 } else { 0 })
}

pub fn encode_png(slice: &Slice) -> ServiceResult<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, slice.width as u32, slice.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc
            .write_header()
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        w.write_image_data(&slice.pixels)
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
    }
    Ok(out)
}
