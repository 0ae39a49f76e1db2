//! Run-length wire formats for masks and scribble sets.
//!
//! A run `[start, length]` marks `length` consecutive set voxels beginning at
//! linear index `start` (x-fastest order). Runs are emitted sorted and
//! non-adjacent. The compact base64 form packs each run as two little-endian
//! `u32` values.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{ScribbleClass, ScribbleSet};
use crate::volume::{Dims, Mask};

pub type Run = [u64; 2];

pub fn encode_runs(mask: &Mask) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for i in mask.indices() {
        let i = i as u64;
        match runs.last_mut() {
            Some(r) if r[0] + r[1] == i => r[1] += 1,
            _ => runs.push([i, 1]),
        }
    }
    runs
}

pub fn decode_runs(dims: Dims, runs: &[Run]) -> Result<Mask> {
    let n = dims.len() as u64;
    let mut mask = Mask::empty(dims);
    for &[start, len] in runs {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= n)
            .ok_or_else(|| Error::Rle(format!("run [{start}, {len}] exceeds {n} voxels")))?;
        for i in start..end {
            mask.set(i as usize, true);
        }
    }
    Ok(mask)
}

pub fn encode_base64(mask: &Mask) -> String {
    let mut bytes = Vec::new();
    for [s, l] in encode_runs(mask) {
        bytes.extend_from_slice(&(s as u32).to_le_bytes());
        bytes.extend_from_slice(&(l as u32).to_le_bytes());
    }
    STANDARD.encode(bytes)
}

pub fn decode_base64(dims: Dims, payload: &str) -> Result<Mask> {
    let bytes = STANDARD
        .decode(payload)
        .map_err(|e| Error::Rle(e.to_string()))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Rle(format!("payload length {} is not a multiple of 8", bytes.len())));
    }
    let runs: Vec<Run> = bytes
        .chunks_exact(8)
        .map(|c| {
            let s = u32::from_le_bytes(c[0..4].try_into().unwrap());
            let l = u32::from_le_bytes(c[4..8].try_into().unwrap());
            [s as u64, l as u64]
        })
        .collect();
    decode_runs(dims, &runs)
}

/// `{"dims": [...], "voxel_count": n, "rle": "<base64>"}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPayload {
    pub dims: Dims,
    pub voxel_count: usize,
    pub rle: String,
}

impl MaskPayload {
    pub fn from_mask(mask: &Mask) -> Self {
        MaskPayload {
            dims: mask.dims(),
            voxel_count: mask.count(),
            rle: encode_base64(mask),
        }
    }

    pub fn to_mask(&self) -> Result<Mask> {
        decode_base64(self.dims, &self.rle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRuns {
    pub class: ScribbleClass,
    pub rle: Vec<Run>,
}

/// JSON form of a [`ScribbleSet`]:
/// `{"dims": [W,H,D], "scribbles": [{"class": "foreground", "rle": [[start, len], ...]}, ...]}`.
/// Several entries of the same class are unioned; foreground wins overlaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScribblePayload {
    pub dims: Dims,
    pub scribbles: Vec<ClassRuns>,
}

impl ScribblePayload {
    pub fn from_set(set: &ScribbleSet) -> Self {
        ScribblePayload {
            dims: set.dims(),
            scribbles: vec![
                ClassRuns {
                    class: ScribbleClass::Foreground,
                    rle: encode_runs(&set.foreground),
                },
                ClassRuns {
                    class: ScribbleClass::Background,
                    rle: encode_runs(&set.background),
                },
            ],
        }
    }

    pub fn to_set(&self) -> Result<ScribbleSet> {
        let mut fg = Mask::empty(self.dims);
        let mut bg = Mask::empty(self.dims);
        for entry in &self.scribbles {
            let m = decode_runs(self.dims, &entry.rle)?;
            let target = match entry.class {
                ScribbleClass::Foreground => &mut fg,
                ScribbleClass::Background => &mut bg,
            };
            for i in m.indices() {
                target.set(i, true);
            }
        }
        ScribbleSet::foreground_wins(fg, bg)
    }
}
