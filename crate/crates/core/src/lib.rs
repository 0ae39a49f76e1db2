//! Interactive segmentation of co-registered anatomical/functional volume pairs.
//!
//! The crate is organised bottom-up:
//!
//! - [`volume`], [`bbox`], [`metrics`], [`resample`] and [`io`] hold the voxel
//!   containers and their plumbing.
//! - [`geodesic`] implements the raster-scan geodesic distance transform, its
//!   region-of-interest restricted variant and an exact shortest-path oracle.
//! - [`interaction`] samples ellipsoid annotations and drives a corrective
//!   simulated annotator.
//! - [`backends`] contains the propose/refine segmentation backends, the
//!   scribble encoding and the graph-cut baseline.
//! - [`phantom`] builds synthetic volume pairs with known ground truth.
//!
//! All voxel data is stored x-fastest: linear index `x + W * (y + H * z)`.

pub mod backends;
pub mod bbox;
pub mod components;
pub mod error;
pub mod geodesic;
pub mod interaction;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod resample;
pub mod rle;
pub mod rng;
pub mod volume;

pub use bbox::BoundingBox;
pub use error::{Error, Result};
pub use volume::{Dims, Mask, ModalityPair, Spacing, Volume};
