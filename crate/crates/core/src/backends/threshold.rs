use crate::components::{close, largest_component};
use crate::error::Result;
use crate::volume::{Mask, ModalityPair};

use super::{param, Backend, BackendDescriptor, Params};

/// Default number of standard deviations above the mean uptake.
pub const DEFAULT_K: f64 = 2.0;

/// Thresholds the functional volume, keeps the largest 6-connected
/// component and closes it with a radius-1 cross.
///
/// Parameters: `threshold` (absolute; overrides `k`), `k` (threshold =
/// mean + k·std of the functional volume). Voxels must exceed the threshold
/// strictly.
pub struct UptakeThreshold;

pub(crate) fn uptake_proposal(pair: &ModalityPair, params: &Params) -> Result<Mask> {
    let func = pair.functional();
    let threshold = match params.get("threshold") {
        Some(&t) => t,
        None => {
            let (mean, std) = func.mean_std();
            mean + param(params, "k", DEFAULT_K) * std
        }
    };
    let bits = func.data().iter().map(|&v| v as f64 > threshold).collect();
    let raw = Mask::from_bits(pair.dims(), bits)?;
    if raw.is_empty() {
        return Ok(raw);
    }
    Ok(close(&largest_component(&raw)))
}

impl Backend for UptakeThreshold {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            name: "uptake-threshold".into(),
            supports_refine: false,
            parameters: [("k".to_string(), DEFAULT_K)].into_iter().collect(),
        }
    }

    fn propose(&self, pair: &ModalityPair, params: &Params) -> Result<Mask> {
        uptake_proposal(pair, params)
    }
}
