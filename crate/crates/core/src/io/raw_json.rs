//! JSON header + little-endian float32 payload in a sibling `.raw` file.
//!
//! ```json
//! {"dims": [W, H, D], "spacing": [sx, sy, sz], "dtype": "f32"}
//! ```
//!
//! The payload for `volume.json` lives in `volume.raw`, x-fastest.

use std::path::{Path, PathBuf};

use byteorder::{ByteOrder, LittleEndian};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Dims, Spacing, Volume};

#[derive(Debug, Serialize, Deserialize)]
struct RawHeader {
    dims: [usize; 3],
    spacing: [f64; 3],
    dtype: String,
}

pub fn payload_path(header: &Path) -> PathBuf {
    header.with_extension("raw")
}

pub fn read_raw_json(path: &Path) -> Result<Volume> {
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| Error::Io { path: p, source }
    };
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let header: RawHeader = serde_json::from_str(&text).map_err(|e| Error::Header {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if header.dtype != "f32" {
        return Err(Error::Header {
            path: path.to_path_buf(),
            reason: format!("unsupported dtype '{}'", header.dtype),
        });
    }
    let payload = payload_path(path);
    let bytes = std::fs::read(&payload).map_err(io_err(&payload))?;
    let dims = Dims(header.dims);
    let expected = dims.len() * 4;
    if bytes.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: bytes.len(),
        });
    }
    let mut data = vec![0f32; dims.len()];
    LittleEndian::read_f32_into(&bytes, &mut data);
    Volume::new(dims, Spacing(header.spacing), data)
}

pub fn write_raw_json(path: &Path, vol: &Volume) -> Result<()> {
    let header = RawHeader {
        dims: vol.dims().0,
        spacing: vol.spacing().0,
        dtype: "f32".into(),
    };
    let mut bytes = vec![0u8; vol.data().len() * 4];
    LittleEndian::write_f32_into(vol.data(), &mut bytes);
    let payload = payload_path(path);
    std::fs::write(path, serde_json::to_vec(&header)?).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(&payload, bytes).map_err(|source| Error::Io {
        path: payload,
        source,
    })
}
