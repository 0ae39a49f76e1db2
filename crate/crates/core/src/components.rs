//! 6-connected component labelling and small morphology helpers.

use std::collections::VecDeque;

use crate::volume::{Dims, Mask};

/// Connected components of a mask (face connectivity).
#[derive(Debug, Clone)]
pub struct Components {
    /// Component id per voxel, `u32::MAX` for background.
    pub labels: Vec<u32>,
    /// Voxel count per component id.
    pub sizes: Vec<usize>,
}

pub const UNLABELED: u32 = u32::MAX;

impl Components {
    /// Id of the largest component; ties go to the lowest id, i.e. the one
    /// containing the earliest voxel in raster order.
    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(u32, usize)> = None;
        for (id, &size) in self.sizes.iter().enumerate() {
            if best.is_none_or(|(_, s)| size > s) {
                best = Some((id as u32, size));
            }
        }
        best.map(|(id, _)| id)
    }

    pub fn mask_of(&self, mask_like: &Mask, id: u32) -> Mask {
        Mask::from_indices(
            mask_like.dims(),
            self.labels
                .iter()
                .enumerate()
                .filter_map(|(i, &l)| (l == id).then_some(i)),
        )
    }
}

pub fn label_components(mask: &Mask) -> Components {
    let dims = mask.dims();
    let mut labels = vec![UNLABELED; dims.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..dims.len() {
        if !mask.get(start) || labels[start] != UNLABELED {
            continue;
        }
        let id = sizes.len() as u32;
        labels[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            dims.for_each_face_neighbor(i, |j| {
                if mask.get(j) && labels[j] == UNLABELED {
                    labels[j] = id;
                    queue.push_back(j);
                }
            });
        }
        sizes.push(size);
    }
    Components { labels, sizes }
}

/// The largest component alone, or an empty mask.
pub fn largest_component(mask: &Mask) -> Mask {
    let comps = label_components(mask);
    match comps.largest() {
        Some(id) => comps.mask_of(mask, id),
        None => Mask::empty(mask.dims()),
    }
}

/// Dilation by the 6-neighbourhood cross.
pub fn dilate(mask: &Mask) -> Mask {
    let dims = mask.dims();
    let mut out = mask.clone();
    for i in mask.indices() {
        dims.for_each_face_neighbor(i, |j| out.set(j, true));
    }
    out
}

/// Erosion by the 6-neighbourhood cross; voxels beyond the border count as unset.
pub fn erode(mask: &Mask) -> Mask {
    let dims = mask.dims();
    let mut out = mask.clone();
    for i in mask.indices() {
        let mut keep = true;
        let mut n = 0;
        dims.for_each_face_neighbor(i, |j| {
            n += 1;
            keep &= mask.get(j);
        });
        out.set(i, keep && n == 6);
    }
    out
}

fn pad(mask: &Mask) -> Mask {
    let [w, h, d] = mask.dims().0;
    Mask::from_fn(Dims::new(w + 2, h + 2, d + 2), |p| {
        p.iter().all(|&c| c >= 1)
            && p[0] <= w
            && p[1] <= h
            && p[2] <= d
            && mask.get_at([p[0] - 1, p[1] - 1, p[2] - 1])
    })
}

/// Morphological closing with radius 1, computed on a grid padded with
/// background so the result never loses voxels and does not grow along the
/// volume border.
pub fn close(mask: &Mask) -> Mask {
    let closed = erode(&dilate(&pad(mask)));
    Mask::from_fn(mask.dims(), |p| closed.get_at([p[0] + 1, p[1] + 1, p[2] + 1]))
}

/// BFS depth of every voxel inside `mask` measured in face steps to the
/// nearest voxel outside it (or outside the volume). Background voxels get 0.
pub fn interior_depth(mask: &Mask) -> Vec<u32> {
    let dims = mask.dims();
    let mut depth = vec![0u32; dims.len()];
    let mut queue = VecDeque::new();
    for i in mask.indices() {
        let mut boundary = false;
        let mut n = 0;
        dims.for_each_face_neighbor(i, |j| {
            n += 1;
            boundary |= !mask.get(j);
        });
        if boundary || n < 6 {
            depth[i] = 1;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let next = depth[i] + 1;
        dims.for_each_face_neighbor(i, |j| {
            if mask.get(j) && depth[j] == 0 {
                depth[j] = next;
                queue.push_back(j);
            }
        });
    }
    depth
}
