use std::path::PathBuf;

use crate::volume::Dims;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header in {path}: {reason}")]
    Header { path: PathBuf, reason: String },
    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("data size mismatch: expected {expected} bytes, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimsMismatch { left: Dims, right: Dims },
    #[error("mask is empty")]
    EmptyMask,
    #[error("seed mask is empty")]
    EmptySeeds,
    #[error("seed voxel {0:?} lies outside the region of interest")]
    SeedOutsideRoi([usize; 3]),
    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),
    #[error("no candidate voxels in the expanded margin")]
    EmptyMargin,
    #[error("ellipsoid center {center:?} lies outside volume {dims:?}")]
    CenterOutside { center: [usize; 3], dims: Dims },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown backend '{name}', registered: {available}")]
    UnknownBackend { name: String, available: String },
    #[error("backend '{0}' does not support refinement")]
    RefineUnsupported(String),
    #[error("scribble class {0} is empty")]
    EmptyScribbleClass(&'static str),
    #[error("max-flow value is not finite")]
    FlowOverflow,
    #[error("malformed run-length encoding: {0}")]
    Rle(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
