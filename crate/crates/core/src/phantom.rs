//! Synthetic anatomical/functional volume pairs with known ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{calc_ellipsoid, Ellipsoid};
use crate::rng::SimRng;
use crate::volume::{Dims, Mask, ModalityPair, Spacing, Volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: Dims,
    #[serde(default)]
    pub spacing: Spacing,
    pub lesion: Ellipsoid,
    /// Added to the anatomical background (0) inside the lesion.
    pub ct_contrast: f32,
    /// Peak of the blurred functional uptake.
    pub pet_peak: f32,
    /// Gaussian blur of the functional indicator, in voxels.
    pub pet_blur: f64,
    pub ct_noise_sigma: f32,
    pub pet_noise_sigma: f32,
    pub rng_seed: u64,
}

impl PhantomSpec {
    /// A 48³ phantom with a noisy, blurred functional channel whose uptake
    /// proposal is poor, so corrective interaction has work to do.
    pub fn standard(seed: u64) -> Self {
        PhantomSpec {
            dims: Dims::new(48, 48, 48),
            spacing: Spacing::UNIT,
            lesion: Ellipsoid {
                center: [24, 22, 25],
                semi_axes: [10.0, 7.0, 6.0],
            },
            ct_contrast: 1.0,
            pet_peak: 10.0,
            pet_blur: 3.0,
            ct_noise_sigma: 0.05,
            pet_noise_sigma: 4.0,
            rng_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dims.contains(self.lesion.center) {
            return Err(Error::CenterOutside {
                center: self.lesion.center,
                dims: self.dims,
            });
        }
        let fits = (0..3).all(|k| {
            let c = self.lesion.center[k] as f64;
            let a = self.lesion.semi_axes[k];
            c - a >= -0.5 && c + a <= self.dims[k] as f64 - 0.5
        });
        if !fits {
            return Err(Error::InvalidConfig("lesion does not fit inside the volume".into()));
        }
        if !(self.ct_noise_sigma >= 0.0 && self.pet_noise_sigma >= 0.0 && self.pet_blur >= 0.0) {
            return Err(Error::InvalidConfig("noise and blur must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Separable Gaussian blur, truncated at 3σ with edge clamping.
fn blur(data: &[f32], dims: Dims, sigma: f64) -> Vec<f32> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let mut cur: Vec<f64> = data.iter().map(|&v| v as f64).collect();
    for axis in 0..3 {
        let n = dims[axis] as isize;
        let mut next = vec![0.0; cur.len()];
        for (i, out) in next.iter_mut().enumerate() {
            let p = dims.coords(i);
            let mut acc = 0.0;
            for (ki, &kw) in kernel.iter().enumerate() {
                let mut q = p;
                q[axis] = (p[axis] as isize + ki as isize - radius).clamp(0, n - 1) as usize;
                acc += kw * cur[dims.index_of(q)];
            }
            *out = acc / norm;
        }
        cur = next;
    }
    cur.into_iter().map(|v| v as f32).collect()
}

/// Builds `(pair, gt)`: gt is the rasterised lesion; the anatomical volume
/// is `ct_contrast` on gt plus noise; the functional volume is the blurred
/// gt indicator scaled so its maximum equals `pet_peak`, plus noise.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(ModalityPair, Mask)> {
    spec.validate()?;
    let dims = spec.dims;
    let gt = calc_ellipsoid(&spec.lesion, dims)?;
    let mut rng = SimRng::new(spec.rng_seed);
    let mut ct_rng = rng.fork();
    let mut pet_rng = rng.fork();

    let ct: Vec<f32> = gt
        .bits()
        .iter()
        .map(|&b| {
            let base = if b { spec.ct_contrast } else { 0.0 };
            base + spec.ct_noise_sigma * ct_rng.normal() as f32
        })
        .collect();

    let indicator: Vec<f32> = gt.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let blurred = blur(&indicator, dims, spec.pet_blur);
    let peak = blurred.iter().cloned().fold(0.0f32, f32::max);
    let scale = if peak > 0.0 { spec.pet_peak / peak } else { 0.0 };
    let pet: Vec<f32> = blurred
        .iter()
        .map(|&v| v * scale + spec.pet_noise_sigma * pet_rng.normal() as f32)
        .collect();

    let anatomical = Volume::new(dims, spec.spacing, ct)?;
    let functional = Volume::new(dims, spec.spacing, pet)?;
    let pair = ModalityPair::new(anatomical, functional)?
        .with_provenance([format!("phantom seed={}", spec.rng_seed)]);
    Ok((pair, gt))
}
