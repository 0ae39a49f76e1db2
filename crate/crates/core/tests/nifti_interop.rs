use geoseg_core::io::{load_volume_auto, save_volume, VolumeFormat};
use geoseg_core::{Dims, Spacing, Volume};
use ndarray::Array3;
use nifti::{IntoNdArray, NiftiHeader, NiftiObject, ReaderOptions};
use nifti::writer::WriterOptions;

fn value(x: usize, y: usize, z: usize) -> f32 {
    x as f32 + 10.0 * y as f32 + 100.0 * z as f32 - 0.25
}

#[test]
fn reads_a_file_written_by_the_nifti_crate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ref.nii");
    let data = Array3::from_shape_fn((3, 5, 7), |(x, y, z)| value(x, y, z));
    let mut header = NiftiHeader::default();
    header.pixdim = [1.0, 2.0, 2.0, 3.0, 1.0, 1.0, 1.0, 1.0];
    WriterOptions::new(&path).reference_header(&header).write_nifti(&data).unwrap();

    let vol = load_volume_auto(&path).unwrap();
    assert_eq!(vol.dims(), Dims::new(3, 5, 7));
    assert_eq!(vol.spacing(), Spacing([2.0, 2.0, 3.0]));
    for z in 0..7 {
        for y in 0..5 {
            for x in 0..3 {
                assert_eq!(vol.get([x, y, z]), value(x, y, z));
            }
        }
    }
}

#[test]
fn the_nifti_crate_reads_our_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ours.nii");
    let vol = Volume::from_fn(Dims::new(4, 3, 2), Spacing([0.5, 1.5, 2.5]), |[x, y, z]| value(x, y, z)).unwrap();
    save_volume(&path, &vol, VolumeFormat::Nifti1).unwrap();

    let obj = ReaderOptions::new().read_file(&path).unwrap();
    let h = obj.header();
    assert_eq!(&h.dim[..4], &[3, 4, 3, 2]);
    assert_eq!(&h.pixdim[1..4], &[0.5, 1.5, 2.5]);
    let arr = obj.into_volume().into_ndarray::<f32>().unwrap();
    assert_eq!(arr.shape(), &[4, 3, 2]);
    for z in 0..2 {
        for y in 0..3 {
            for x in 0..4 {
                assert_eq!(arr[[x, y, z]], value(x, y, z));
            }
        }
    }
}
