use crate::bbox::BoundingBox;
use crate::error::Result;
use crate::geodesic::{determine_roi, gdt_roi, DistanceMap, GeodesicConfig};
use crate::interaction::ScribbleSet;
use crate::volume::{Mask, ModalityPair, Volume};

/// Channel value meaning "no annotation nearby": the normalised maximum
/// distance. Used outside each RoI and for absent scribble classes.
pub const EMPTY_CHANNEL_VALUE: f32 = 1.0;

/// Encoded user input for refinement: normalised geodesic distance channels
/// for both scribble classes plus the previous mask.
#[derive(Debug, Clone)]
pub struct InteractionChannels {
    pub fg_gdt: DistanceMap,
    pub bg_gdt: DistanceMap,
    pub prev_mask: Mask,
}

impl InteractionChannels {
    /// Recovers the scribbles: seed voxels are exactly the zeros of a channel.
    pub fn seeds(&self) -> ScribbleSet {
        let zeros = |m: &DistanceMap| {
            Mask::from_indices(
                m.dims(),
                m.values()
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &v)| (v == 0.0).then_some(i)),
            )
        };
        ScribbleSet {
            foreground: zeros(&self.fg_gdt),
            background: zeros(&self.bg_gdt),
        }
    }

    /// Voxels inside either class's RoI.
    pub fn union_roi(&self) -> Vec<BoundingBox> {
        [self.fg_gdt.roi, self.bg_gdt.roi].into_iter().flatten().collect()
    }
}

fn empty_channel(pair: &ModalityPair) -> DistanceMap {
    DistanceMap {
        map: Volume::from_parts_unchecked(
            pair.dims(),
            pair.spacing(),
            vec![EMPTY_CHANNEL_VALUE; pair.dims().len()],
        ),
        roi: None,
        outside_value: EMPTY_CHANNEL_VALUE,
    }
}

fn encode_class(
    pair: &ModalityPair,
    seeds: &Mask,
    cfg: &GeodesicConfig,
    roi_expansion: f64,
) -> Result<DistanceMap> {
    if seeds.is_empty() {
        return Ok(empty_channel(pair));
    }
    let dims = pair.dims();
    let roi = determine_roi(seeds, None, roi_expansion, dims)?;
    let mut m = gdt_roi(pair.anatomical(), seeds, cfg, &roi, EMPTY_CHANNEL_VALUE)?;
    let max = roi
        .indices(dims)
        .map(|i| m.values()[i])
        .fold(0.0f32, f32::max);
    if max > 0.0 {
        let mut data = m.map.into_data();
        for i in roi.indices(dims) {
            data[i] /= max;
        }
        m.map = Volume::from_parts_unchecked(dims, pair.spacing(), data);
    }
    Ok(m)
}

/// Geodesic encoding of both scribble classes on the anatomical volume.
///
/// A nonempty class gets a RoI transform around its scribbles (box scaled by
/// `roi_expansion`), divided by its in-RoI maximum so values lie in [0, 1].
/// An empty class yields a constant [`EMPTY_CHANNEL_VALUE`] map.
pub fn encode_interactions(
    pair: &ModalityPair,
    scribbles: &ScribbleSet,
    prev_mask: &Mask,
    cfg: &GeodesicConfig,
    roi_expansion: f64,
) -> Result<InteractionChannels> {
    scribbles.foreground.ensure_same_dims(pair.dims())?;
    prev_mask.ensure_same_dims(pair.dims())?;
    Ok(InteractionChannels {
        fg_gdt: encode_class(pair, &scribbles.foreground, cfg, roi_expansion)?,
        bg_gdt: encode_class(pair, &scribbles.background, cfg, roi_expansion)?,
        prev_mask: prev_mask.clone(),
    })
}
