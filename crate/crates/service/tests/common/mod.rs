#![allow(dead_code)]

use std::path::{Path, PathBuf};

use geoseg_core::interaction::Ellipsoid;
use geoseg_core::io::{save_mask_nifti, save_volume, VolumeFormat};
use geoseg_core::phantom::{generate_phantom, PhantomSpec};
use geoseg_core::{Dims, Mask, ModalityPair, Spacing};
use geoseg_service::{CreateRequest, ServiceConfig};
use tempfile::TempDir;

pub struct Fixture {
    pub dir: TempDir,
    pub cfg: ServiceConfig,
    pub pair: ModalityPair,
    pub gt: Mask,
}

pub fn small_spec(seed: u64) -> PhantomSpec {
    PhantomSpec {
        dims: Dims::new(24, 24, 20),
        spacing: Spacing::UNIT,
        lesion: Ellipsoid {
            center: [12, 11, 10],
            semi_axes: [6.0, 5.0, 4.0],
        },
        ct_contrast: 1.0,
        pet_peak: 10.0,
        pet_blur: 2.0,
        ct_noise_sigma: 0.05,
        pet_noise_sigma: 3.0,
        rng_seed: seed,
    }
}

pub fn write_pair(dir: &Path, pair: &ModalityPair, gt: &Mask) {
    save_volume(&dir.join("ct.nii"), pair.anatomical(), VolumeFormat::Nifti1).unwrap();
    save_volume(&dir.join("pet.json"), pair.functional(), VolumeFormat::RawJson).unwrap();
    save_mask_nifti(&dir.join("gt.nii"), gt, pair.spacing()).unwrap();
}

pub fn fixture_from(spec: &PhantomSpec) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let (pair, gt) = generate_phantom(spec).unwrap();
    write_pair(dir.path(), &pair, &gt);
    let cfg = ServiceConfig {
        data_root: dir.path().to_path_buf(),
        roi_expansion: 1.5,
        geodesic: geoseg_core::geodesic::GeodesicConfig {
            lambda: 30.0,
            ..Default::default()
        },
        ..Default::default()
    };
    Fixture { dir, cfg, pair, gt }
}

pub fn fixture(seed: u64) -> Fixture {
    fixture_from(&small_spec(seed))
}

pub fn request(backend: &str, with_gt: bool) -> CreateRequest {
    CreateRequest {
        anatomical_ref: PathBuf::from("ct.nii"),
        functional_ref: PathBuf::from("pet.json"),
        backend: backend.to_string(),
        gt_ref: with_gt.then(|| PathBuf::from("gt.nii")),
        params: [("w_prev".to_string(), 0.5)].into_iter().collect(),
    }
}
