use crate::error::Result;
use crate::volume::{Mask, ModalityPair};

use super::threshold::{uptake_proposal, DEFAULT_K};
use super::{param, Backend, BackendDescriptor, InteractionChannels, Params};

pub const DEFAULT_W_PREV: f64 = 0.25;
pub const DEFAULT_W_GEO: f64 = 1.0;

/// Proposes with the uptake threshold and refines by comparing the two
/// geodesic channels.
///
/// Inside the union of the scribble RoIs a voxel becomes foreground iff
/// `w_prev · s(v) + w_geo · (bg(v) − fg(v)) > 0`, with `s = +1` on the
/// previous mask and `−1` elsewhere. Voxels outside every RoI keep their
/// previous label.
pub struct GeodesicRefiner;

impl Backend for GeodesicRefiner {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            name: "geodesic-refiner".into(),
            supports_refine: true,
            parameters: [
                ("k".to_string(), DEFAULT_K),
                ("w_prev".to_string(), DEFAULT_W_PREV),
                ("w_geo".to_string(), DEFAULT_W_GEO),
            ]
            .into_iter()
            .collect(),
        }
    }

    fn propose(&self, pair: &ModalityPair, params: &Params) -> Result<Mask> {
        uptake_proposal(pair, params)
    }

    fn refine(
        &self,
        pair: &ModalityPair,
        channels: &InteractionChannels,
        params: &Params,
    ) -> Result<Mask> {
        let w_prev = param(params, "w_prev", DEFAULT_W_PREV);
        let w_geo = param(params, "w_geo", DEFAULT_W_GEO);
        let dims = pair.dims();
        channels.prev_mask.ensure_same_dims(dims)?;
        let fg = channels.fg_gdt.values();
        let bg = channels.bg_gdt.values();
        let mut out = channels.prev_mask.clone();
        let mut visited = vec![false; dims.len()];
        for roi in channels.union_roi() {
            for i in roi.indices(dims) {
                if std::mem::replace(&mut visited[i], true) {
                    continue;
                }
                let prev = if channels.prev_mask.get(i) { 1.0 } else { -1.0 };
                let score = w_prev * prev + w_geo * (bg[i] as f64 - fg[i] as f64);
                out.set(i, score > 0.0);
            }
        }
        Ok(out)
    }
}
