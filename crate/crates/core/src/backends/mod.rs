//! Propose/refine segmentation backends.
//!
//! Every backend sees the same inputs: the modality pair for proposals, and
//! the pair plus [`InteractionChannels`] (foreground/background distance
//! channels and the previous mask) for refinement. The top-level [`refine`]
//! re-applies the user's scribbles as hard constraints on whatever the
//! backend returns.

mod encode;
mod geodesic_refiner;
pub mod graphcut;
pub mod maxflow;
mod threshold;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use encode::{encode_interactions, InteractionChannels, EMPTY_CHANNEL_VALUE};
pub use geodesic_refiner::GeodesicRefiner;
pub use graphcut::{graphcut_segment, GraphCutBackend};
pub use threshold::UptakeThreshold;

use crate::error::{Error, Result};
use crate::interaction::ScribbleSet;
use crate::volume::{Mask, ModalityPair};

/// Flat key → number backend parameters.
pub type Params = BTreeMap<String, f64>;

pub(crate) fn param(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub name: String,
    pub supports_refine: bool,
    /// Parameter defaults.
    pub parameters: Params,
}

pub trait Backend: Send + Sync {
    fn descriptor(&self) -> BackendDescriptor;

    /// Initial segmentation from the volumes alone.
    fn propose(&self, pair: &ModalityPair, params: &Params) -> Result<Mask>;

    /// New segmentation from the volumes and encoded interactions.
    fn refine(
        &self,
        _pair: &ModalityPair,
        _channels: &InteractionChannels,
        _params: &Params,
    ) -> Result<Mask> {
        Err(Error::RefineUnsupported(self.descriptor().name))
    }
}

/// Backends addressed by name.
#[derive(Clone)]
pub struct Registry {
    backends: BTreeMap<String, Arc<dyn Backend>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            backends: BTreeMap::new(),
        }
    }

    /// `uptake-threshold` (proposal only), `geodesic-refiner` and `graphcut`.
    pub fn with_builtins() -> Self {
        let mut r = Registry::empty();
        r.register(Arc::new(UptakeThreshold));
        r.register(Arc::new(GeodesicRefiner));
        r.register(Arc::new(GraphCutBackend));
        r
    }

    /// Adds a backend, replacing any previous one with the same name.
    pub fn register(&mut self, backend: Arc<dyn Backend>) {
        self.backends.insert(backend.descriptor().name, backend);
    }

    pub fn names(&self) -> Vec<String> {
        self.backends.keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Result<&Arc<dyn Backend>> {
        self.backends.get(name).ok_or_else(|| Error::UnknownBackend {
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn descriptors(&self) -> Vec<BackendDescriptor> {
        self.backends.values().map(|b| b.descriptor()).collect()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::with_builtins()
    }
}

pub fn propose(registry: &Registry, backend: &str, pair: &ModalityPair, params: &Params) -> Result<Mask> {
    registry.get(backend)?.propose(pair, params)
}

/// Runs the backend's refinement and enforces the scribbles carried by
/// `channels` on the result.
pub fn refine(
    registry: &Registry,
    backend: &str,
    pair: &ModalityPair,
    channels: &InteractionChannels,
    params: &Params,
) -> Result<Mask> {
    let b = registry.get(backend)?;
    if !b.descriptor().supports_refine {
        return Err(Error::RefineUnsupported(backend.to_string()));
    }
    let mask = b.refine(pair, channels, params)?;
    enforce_constraints(&mask, &channels.seeds())
}

/// `(mask ∪ foreground) \ background`.
pub fn enforce_constraints(mask: &Mask, scribbles: &ScribbleSet) -> Result<Mask> {
    mask.union(&scribbles.foreground)?
        .difference(&scribbles.background)
}
