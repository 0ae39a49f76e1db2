//! Minimal single-file NIfTI-1 (`.nii`) reader and writer.
//!
//! Supported: uncompressed `n+1` files, either byte order, datatypes
//! uint8/int16/float32/float64, `scl_slope`/`scl_inter` scaling and `pixdim`
//! spacing. qform/sform orientation is ignored.

use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};

use crate::error::{Error, Result};
use crate::volume::{Dims, Spacing, Volume};

const HEADER_SIZE: usize = 348;
const DATA_OFFSET: usize = 352;

/// Voxel storage types understood by the reader/writer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiftiDatatype {
    U8,
    I16,
    F32,
    F64,
}

impl NiftiDatatype {
    pub fn code(self) -> i16 {
        match self {
            NiftiDatatype::U8 => 2,
            NiftiDatatype::I16 => 4,
            NiftiDatatype::F32 => 16,
            NiftiDatatype::F64 => 64,
        }
    }

    pub fn from_code(code: i16) -> Result<Self> {
        Ok(match code {
            2 => NiftiDatatype::U8,
            4 => NiftiDatatype::I16,
            16 => NiftiDatatype::F32,
            64 => NiftiDatatype::F64,
            other => return Err(Error::UnsupportedDatatype(other)),
        })
    }

    pub fn bytes(self) -> usize {
        match self {
            NiftiDatatype::U8 => 1,
            NiftiDatatype::I16 => 2,
            NiftiDatatype::F32 => 4,
            NiftiDatatype::F64 => 8,
        }
    }
}

struct Header {
    big_endian: bool,
    dims: Dims,
    spacing: Spacing,
    datatype: NiftiDatatype,
    vox_offset: usize,
    slope: f32,
    inter: f32,
}

fn header_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Header {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_SIZE {
        return Err(header_err(path, format!("file is only {} bytes", bytes.len())));
    }
    let big_endian = match (
        LittleEndian::read_i32(&bytes[0..4]),
        BigEndian::read_i32(&bytes[0..4]),
    ) {
        (348, _) => false,
        (_, 348) => true,
        _ => return Err(header_err(path, "sizeof_hdr is not 348")),
    };
    if &bytes[344..347] != b"n+1" {
        return Err(header_err(path, "magic is not n+1 (only single-file .nii supported)"));
    }
    let i16_at = |o: usize| {
        if big_endian {
            BigEndian::read_i16(&bytes[o..o + 2])
        } else {
            LittleEndian::read_i16(&bytes[o..o + 2])
        }
    };
    let f32_at = |o: usize| {
        if big_endian {
            BigEndian::read_f32(&bytes[o..o + 4])
        } else {
            LittleEndian::read_f32(&bytes[o..o + 4])
        }
    };

    let ndim = i16_at(40);
    if !(1..=7).contains(&ndim) {
        return Err(header_err(path, format!("dim[0] = {ndim}")));
    }
    let mut dims = [1usize; 3];
    for k in 1..=ndim as usize {
        let n = i16_at(40 + 2 * k);
        if n < 1 {
            return Err(header_err(path, format!("dim[{k}] = {n}")));
        }
        if k <= 3 {
            dims[k - 1] = n as usize;
        } else if n > 1 {
            return Err(header_err(path, "only 3D volumes are supported"));
        }
    }
    let mut spacing = [1.0f64; 3];
    for (k, s) in spacing.iter_mut().enumerate().take(ndim.min(3) as usize) {
        let v = f32_at(80 + 4 * k).abs() as f64;
        // Zero pixdim is common in hand-written files; treat as 1 mm.
        *s = if v > 0.0 && v.is_finite() { v } else { 1.0 };
    }
    let datatype = NiftiDatatype::from_code(i16_at(70))?;
    let vox_offset = f32_at(108);
    if !(vox_offset >= HEADER_SIZE as f32) {
        return Err(header_err(path, format!("vox_offset = {vox_offset}")));
    }
    Ok(Header {
        big_endian,
        dims: Dims(dims),
        spacing: Spacing(spacing),
        datatype,
        vox_offset: vox_offset as usize,
        slope: f32_at(112),
        inter: f32_at(116),
    })
}

fn decode<B: ByteOrder>(dt: NiftiDatatype, raw: &[u8], n: usize) -> Vec<f32> {
    let w = dt.bytes();
    (0..n)
        .map(|i| {
            let b = &raw[i * w..(i + 1) * w];
            match dt {
                NiftiDatatype::U8 => b[0] as f32,
                NiftiDatatype::I16 => B::read_i16(b) as f32,
                NiftiDatatype::F32 => B::read_f32(b),
                NiftiDatatype::F64 => B::read_f64(b) as f32,
            }
        })
        .collect()
}

/// Reads a `.nii` file into a [`Volume`], applying intensity scaling.
pub fn read_nifti(path: &Path) -> Result<Volume> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let h = parse_header(path, &bytes)?;
    let n = h.dims.len();
    let expected = n * h.datatype.bytes();
    let available = bytes.len().saturating_sub(h.vox_offset);
    if available < expected {
        return Err(Error::SizeMismatch {
            expected,
            found: available,
        });
    }
    let raw = &bytes[h.vox_offset..h.vox_offset + expected];
    let mut data = if h.big_endian {
        decode::<BigEndian>(h.datatype, raw, n)
    } else {
        decode::<LittleEndian>(h.datatype, raw, n)
    };
    let scaled = h.slope != 1.0 || h.inter != 0.0;
    if scaled && h.slope != 0.0 && h.slope.is_finite() && h.inter.is_finite() {
        for v in &mut data {
            *v = *v * h.slope + h.inter;
        }
    }
    Volume::new(h.dims, h.spacing, data)
}

/// Writes a little-endian `.nii` file. Values are rounded and saturated for
/// integer datatypes.
pub fn write_nifti(path: &Path, vol: &Volume, datatype: NiftiDatatype) -> Result<()> {
    let mut out = vec![0u8; DATA_OFFSET];
    LittleEndian::write_i32(&mut out[0..4], HEADER_SIZE as i32);
    out[38] = b'r';
    let dims = vol.dims();
    let dim = [3i16, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, 1, 1, 1];
    if dims.0.iter().any(|&n| n > i16::MAX as usize) {
        return Err(Error::InvalidVolume(format!("dims {:?} exceed NIfTI-1 limits", dims.0)));
    }
    for (k, &d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut out[40 + 2 * k..], d);
    }
    LittleEndian::write_i16(&mut out[70..], datatype.code());
    LittleEndian::write_i16(&mut out[72..], (datatype.bytes() * 8) as i16);
    let sp = vol.spacing().0;
    let pixdim = [1.0f32, sp[0] as f32, sp[1] as f32, sp[2] as f32, 1.0, 1.0, 1.0, 1.0];
    for (k, &p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut out[76 + 4 * k..], p);
    }
    LittleEndian::write_f32(&mut out[108..], DATA_OFFSET as f32);
    LittleEndian::write_f32(&mut out[112..], 1.0);
    LittleEndian::write_f32(&mut out[116..], 0.0);
    // xyzt_units: millimetres
    out[123] = 2;
    out[344..348].copy_from_slice(b"n+1\0");

    out.reserve(vol.data().len() * datatype.bytes());
    let mut buf = [0u8; 8];
    for &v in vol.data() {
        let w = datatype.bytes();
        match datatype {
            NiftiDatatype::U8 => buf[0] = v.round().clamp(0.0, 255.0) as u8,
            NiftiDatatype::I16 => LittleEndian::write_i16(
                &mut buf,
                v.round().clamp(i16::MIN as f32, i16::MAX as f32) as i16,
            ),
            NiftiDatatype::F32 => LittleEndian::write_f32(&mut buf, v),
            NiftiDatatype::F64 => LittleEndian::write_f64(&mut buf, v as f64),
        }
        out.extend_from_slice(&buf[..w]);
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
