//! Dense voxel containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voxel counts along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dims(pub [usize; 3]);

impl Dims {
    pub const fn new(w: usize, h: usize, d: usize) -> Self {
        Dims([w, h, d])
    }

    pub fn len(&self) -> usize {
        self.0[0] * self.0[1] * self.0[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.0[0] * (y + self.0[1] * z)
    }

    #[inline]
    pub fn index_of(&self, p: [usize; 3]) -> usize {
        self.index(p[0], p[1], p[2])
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let w = self.0[0];
        let h = self.0[1];
        [i % w, (i / w) % h, i / (w * h)]
    }

    pub fn contains(&self, p: [usize; 3]) -> bool {
        p[0] < self.0[0] && p[1] < self.0[1] && p[2] < self.0[2]
    }

    /// Visits the in-bounds 6-neighbours of linear index `i`.
    #[inline]
    pub fn for_each_face_neighbor(&self, i: usize, mut f: impl FnMut(usize)) {
        let [w, h, d] = self.0;
        let [x, y, z] = self.coords(i);
        let plane = w * h;
        if x > 0 {
            f(i - 1);
        }
        if x + 1 < w {
            f(i + 1);
        }
        if y > 0 {
            f(i - w);
        }
        if y + 1 < h {
            f(i + w);
        }
        if z > 0 {
            f(i - plane);
        }
        if z + 1 < d {
            f(i + plane);
        }
    }

    fn validate(&self) -> Result<()> {
        if self.0.contains(&0) {
            return Err(Error::InvalidVolume(format!("zero-sized dims {:?}", self.0)));
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for Dims {
    type Output = usize;
    fn index(&self, axis: usize) -> &usize {
        &self.0[axis]
    }
}

/// Millimetres per voxel along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spacing(pub [f64; 3]);

impl Spacing {
    pub const UNIT: Spacing = Spacing([1.0, 1.0, 1.0]);

    fn validate(&self) -> Result<()> {
        if self.0.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidVolume(format!("non-positive spacing {:?}", self.0)));
        }
        Ok(())
    }
}

impl Default for Spacing {
    fn default() -> Self {
        Spacing::UNIT
    }
}

/// A 3D scalar field with physical voxel spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: Dims,
    spacing: Spacing,
    data: Vec<f32>,
}

impl Volume {
    /// Builds a volume, rejecting empty dims, bad spacing, length mismatches
    /// and non-finite voxels.
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<f32>) -> Result<Self> {
        dims.validate()?;
        spacing.validate()?;
        if data.len() != dims.len() {
            return Err(Error::SizeMismatch {
                expected: dims.len(),
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVolume(format!(
                "non-finite value at voxel {:?}",
                dims.coords(i)
            )));
        }
        Ok(Volume { dims, spacing, data })
    }

    pub fn filled(dims: Dims, spacing: Spacing, value: f32) -> Result<Self> {
        Volume::new(dims, spacing, vec![value; dims.len()])
    }

    pub fn from_fn(
        dims: Dims,
        spacing: Spacing,
        mut f: impl FnMut([usize; 3]) -> f32,
    ) -> Result<Self> {
        let data = (0..dims.len()).map(|i| f(dims.coords(i))).collect();
        Volume::new(dims, spacing, data)
    }

    /// Crate-internal constructor for data already known to be valid.
    pub(crate) fn from_parts_unchecked(dims: Dims, spacing: Spacing, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), dims.len());
        Volume { dims, spacing, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, p: [usize; 3]) -> f32 {
        self.data[self.dims.index_of(p)]
    }

    /// (min, max) over all voxels.
    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean_std(&self) -> (f64, f64) {
        let n = self.data.len() as f64;
        let mean = self.data.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = self
            .data
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        (mean, var.sqrt())
    }
}

/// One boolean per voxel, same ordering as [`Volume`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    dims: Dims,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(dims: Dims) -> Self {
        Mask {
            dims,
            bits: vec![false; dims.len()],
        }
    }

    pub fn full(dims: Dims) -> Self {
        Mask {
            dims,
            bits: vec![true; dims.len()],
        }
    }

    pub fn from_bits(dims: Dims, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != dims.len() {
            return Err(Error::SizeMismatch {
                expected: dims.len(),
                found: bits.len(),
            });
        }
        Ok(Mask { dims, bits })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut([usize; 3]) -> bool) -> Self {
        let bits = (0..dims.len()).map(|i| f(dims.coords(i))).collect();
        Mask { dims, bits }
    }

    pub fn from_indices(dims: Dims, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Mask::empty(dims);
        for i in indices {
            m.bits[i] = true;
        }
        m
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn get_at(&self, p: [usize; 3]) -> bool {
        self.bits[self.dims.index_of(p)]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Linear indices of set voxels, ascending.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn ensure_same_dims(&self, other: Dims) -> Result<()> {
        if self.dims != other {
            return Err(Error::DimsMismatch {
                left: self.dims,
                right: other,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Result<Mask> {
        self.ensure_same_dims(other.dims)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Mask {
            dims: self.dims,
            bits,
        })
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Mask) -> Result<Mask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Mask) -> Result<Mask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Mask {
        Mask {
            dims: self.dims,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    pub fn intersection_count(&self, other: &Mask) -> Result<usize> {
        self.ensure_same_dims(other.dims)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count())
    }
}

/// Co-registered anatomical (CT-like) and functional (PET-like) volumes on one grid.
#[derive(Debug, Clone)]
pub struct ModalityPair {
    anatomical: Volume,
    functional: Volume,
    pub provenance: Vec<String>,
}

impl ModalityPair {
    /// Pairs two volumes that already share a grid.
    pub fn new(anatomical: Volume, functional: Volume) -> Result<Self> {
        if anatomical.dims() != functional.dims() {
            return Err(Error::DimsMismatch {
                left: anatomical.dims(),
                right: functional.dims(),
            });
        }
        if anatomical.spacing() != functional.spacing() {
            return Err(Error::InvalidVolume(format!(
                "spacing mismatch: {:?} vs {:?}",
                anatomical.spacing().0,
                functional.spacing().0
            )));
        }
        Ok(ModalityPair {
            anatomical,
            functional,
            provenance: Vec::new(),
        })
    }

    /// Resamples the functional volume onto the anatomical grid first.
    pub fn resampled(anatomical: Volume, functional: &Volume) -> Result<Self> {
        let functional = crate::resample::resample_to_grid(
            functional,
            anatomical.dims(),
            anatomical.spacing(),
        )?;
        ModalityPair::new(anatomical, functional)
    }

    pub fn with_provenance(mut self, sources: impl IntoIterator<Item = String>) -> Self {
        self.provenance.extend(sources);
        self
    }

    pub fn anatomical(&self) -> &Volume {
        &self.anatomical
    }

    pub fn functional(&self) -> &Volume {
        &self.functional
    }

    pub fn dims(&self) -> Dims {
        self.anatomical.dims()
    }

    pub fn spacing(&self) -> Spacing {
        self.anatomical.spacing()
    }
}
