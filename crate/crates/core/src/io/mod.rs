//! Volume file formats.

mod nifti;
mod raw_json;

use std::path::Path;

pub use nifti::{read_nifti, write_nifti, NiftiDatatype};
pub use raw_json::{payload_path, read_raw_json, write_raw_json};

use crate::error::{Error, Result};
use crate::volume::{Mask, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeFormat {
    Nifti1,
    RawJson,
}

impl VolumeFormat {
    /// Picks the format from the file extension (`.nii` or `.json`).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("nii") => Ok(VolumeFormat::Nifti1),
            Some("json") => Ok(VolumeFormat::RawJson),
            _ => Err(Error::Header {
                path: path.to_path_buf(),
                reason: "unrecognised extension (expected .nii or .json)".into(),
            }),
        }
    }
}

pub fn load_volume(path: &Path, format: VolumeFormat) -> Result<Volume> {
    match format {
        VolumeFormat::Nifti1 => read_nifti(path),
        VolumeFormat::RawJson => read_raw_json(path),
    }
}

pub fn save_volume(path: &Path, vol: &Volume, format: VolumeFormat) -> Result<()> {
    match format {
        VolumeFormat::Nifti1 => write_nifti(path, vol, NiftiDatatype::F32),
        VolumeFormat::RawJson => write_raw_json(path, vol),
    }
}

/// Loads a volume, choosing the format from the extension.
pub fn load_volume_auto(path: &Path) -> Result<Volume> {
    load_volume(path, VolumeFormat::from_path(path)?)
}

/// Loads a label volume; any nonzero voxel is foreground.
pub fn load_mask(path: &Path) -> Result<Mask> {
    let v = load_volume_auto(path)?;
    let bits = v.data().iter().map(|&x| x != 0.0).collect();
    Mask::from_bits(v.dims(), bits)
}

/// Writes a mask as a uint8 NIfTI volume (0/1).
pub fn save_mask_nifti(path: &Path, mask: &Mask, spacing: crate::Spacing) -> Result<()> {
    let data = mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let vol = Volume::new(mask.dims(), spacing, data)?;
    write_nifti(path, &vol, NiftiDatatype::U8)
}
