//! Scribble-seeded binary graph cut on the anatomical volume.
//!
//! Energy over the 6-connected voxel graph of a RoI around the scribbles:
//!
//! ```text
//! E(L) = Σ_v U_v(L_v) + Σ_{(u,v), L_u ≠ L_v} w_pair · exp(-(I_u - I_v)² / 2σ²) / dist(u, v)
//! ```
//!
//! `U_v(c)` is the negative log-likelihood of `I_v` under a Gaussian fitted to
//! the voxels scribbled with class `c`; scribbled voxels are tied to their
//! class with infinite terminal links. Intensities are min-max normalised
//! over the RoI. Voxels outside the RoI are background.

use crate::bbox::BoundingBox;
use crate::error::{Error, Result};
use crate::geodesic::determine_roi;
use crate::interaction::ScribbleSet;
use crate::volume::{Mask, ModalityPair};

use super::maxflow::FlowGraph;
use super::threshold::{uptake_proposal, DEFAULT_K};
use super::{param, Backend, BackendDescriptor, InteractionChannels, Params};

pub const DEFAULT_W_PAIR: f64 = 1.0;
pub const DEFAULT_SIGMA: f64 = 0.1;
pub const DEFAULT_ROI_EXPANSION: f64 = 3.0;
/// Lower bound on fitted class variances (normalised intensity units).
pub const VARIANCE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphCutParams {
    pub w_pair: f64,
    pub sigma: f64,
    pub roi_expansion: f64,
}

impl GraphCutParams {
    pub fn from_params(p: &Params) -> Self {
        GraphCutParams {
            w_pair: param(p, "w_pair", DEFAULT_W_PAIR),
            sigma: param(p, "sigma", DEFAULT_SIGMA),
            roi_expansion: param(p, "roi_expansion", DEFAULT_ROI_EXPANSION),
        }
    }
}

impl Default for GraphCutParams {
    fn default() -> Self {
        GraphCutParams::from_params(&Params::new())
    }
}

/// Terminal constraint of one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seed {
    Free,
    Foreground,
    Background,
}

/// The discrete energy over the RoI voxels, in roi-local order.
#[derive(Debug, Clone)]
pub struct GraphCutModel {
    pub roi: BoundingBox,
    /// Cost of labelling each node foreground / background (shifted so the
    /// smaller of the two is 0).
    pub unary_fg: Vec<f64>,
    pub unary_bg: Vec<f64>,
    pub seeds: Vec<Seed>,
    /// Undirected pairwise terms `(u, v, weight)`.
    pub edges: Vec<(usize, usize, f64)>,
}

fn gaussian_fit(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.max(VARIANCE_FLOOR))
}

fn neg_log_likelihood(x: f64, (mean, var): (f64, f64)) -> f64 {
    0.5 * (std::f64::consts::TAU * var).ln() + (x - mean).powi(2) / (2.0 * var)
}

impl GraphCutModel {
    pub fn build(
        pair: &ModalityPair,
        scribbles: &ScribbleSet,
        roi: BoundingBox,
        params: &GraphCutParams,
    ) -> Result<Self> {
        let dims = pair.dims();
        scribbles.foreground.ensure_same_dims(dims)?;
        if scribbles.foreground.is_empty() {
            return Err(Error::EmptyScribbleClass("foreground"));
        }
        if scribbles.background.is_empty() {
            return Err(Error::EmptyScribbleClass("background"));
        }
        let data = pair.anatomical().data();
        let global: Vec<usize> = roi.indices(dims).collect();
        let (lo, hi) = global
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(data[i]), hi.max(data[i]))
            });
        let range = (hi - lo) as f64;
        let intensity: Vec<f64> = global
            .iter()
            .map(|&i| if range > 0.0 { (data[i] - lo) as f64 / range } else { 0.0 })
            .collect();
        let seeds: Vec<Seed> = global
            .iter()
            .map(|&i| {
                if scribbles.foreground.get(i) {
                    Seed::Foreground
                } else if scribbles.background.get(i) {
                    Seed::Background
                } else {
                    Seed::Free
                }
            })
            .collect();
        let class_fit = |class: Seed| {
            gaussian_fit(
                seeds
                    .iter()
                    .zip(&intensity)
                    .filter(|(&s, _)| s == class)
                    .map(|(_, &x)| x),
            )
        };
        // Scribbles outside the RoI cannot happen: the RoI is built around them.
        let fg_fit = class_fit(Seed::Foreground);
        let bg_fit = class_fit(Seed::Background);
        let mut unary_fg = Vec::with_capacity(global.len());
        let mut unary_bg = Vec::with_capacity(global.len());
        for &x in &intensity {
            let f = neg_log_likelihood(x, fg_fit);
            let b = neg_log_likelihood(x, bg_fit);
            let m = f.min(b);
            unary_fg.push(f - m);
            unary_bg.push(b - m);
        }

        let [w, h, d] = roi.extent();
        let sp = pair.spacing().0;
        let two_sigma_sq = 2.0 * params.sigma * params.sigma;
        let mut edges = Vec::with_capacity(3 * global.len());
        let local = |x: usize, y: usize, z: usize| x + w * (y + h * z);
        for z in 0..d {
            for y in 0..h {
                for x in 0..w {
                    let u = local(x, y, z);
                    let mut link = |v: usize, dist: f64| {
                        let di = intensity[u] - intensity[v];
                        let wt = params.w_pair * (-di * di / two_sigma_sq).exp() / dist;
                        edges.push((u, v, wt));
                    };
                    if x + 1 < w {
                        link(local(x + 1, y, z), sp[0]);
                    }
                    if y + 1 < h {
                        link(local(x, y + 1, z), sp[1]);
                    }
                    if z + 1 < d {
                        link(local(x, y, z + 1), sp[2]);
                    }
                }
            }
        }
        Ok(GraphCutModel {
            roi,
            unary_fg,
            unary_bg,
            seeds,
            edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.seeds.len()
    }

    /// Energy of a roi-local labelling (`true` = foreground); infinite if a
    /// seed is violated. Seeded voxels contribute no unary term.
    pub fn energy(&self, labels: &[bool]) -> f64 {
        let mut e = 0.0;
        for (i, &l) in labels.iter().enumerate() {
            match (self.seeds[i], l) {
                (Seed::Foreground, false) | (Seed::Background, true) => return f64::INFINITY,
                (Seed::Free, true) => e += self.unary_fg[i],
                (Seed::Free, false) => e += self.unary_bg[i],
                _ => {}
            }
        }
        for &(u, v, w) in &self.edges {
            if labels[u] != labels[v] {
                e += w;
            }
        }
        e
    }

    /// Minimum-energy labelling via a single s-t min cut. Returns the
    /// labels and the cut value.
    pub fn solve(&self) -> Result<(Vec<bool>, f64)> {
        let n = self.node_count();
        let (s, t) = (n, n + 1);
        let mut g = FlowGraph::new(n + 2);
        for i in 0..n {
            // Cutting s→i labels i background; cutting i→t labels it foreground.
            let (to_source, to_sink) = match self.seeds[i] {
                Seed::Foreground => (f64::INFINITY, 0.0),
                Seed::Background => (0.0, f64::INFINITY),
                Seed::Free => (self.unary_bg[i], self.unary_fg[i]),
            };
            if to_source > 0.0 {
                g.add_edge(s, i, to_source, 0.0);
            }
            if to_sink > 0.0 {
                g.add_edge(i, t, to_sink, 0.0);
            }
        }
        for &(u, v, w) in &self.edges {
            g.add_edge(u, v, w, w);
        }
        let flow = g.max_flow(s, t);
        if !flow.is_finite() {
            return Err(Error::FlowOverflow);
        }
        let side = g.source_side(s);
        Ok((side[..n].to_vec(), flow))
    }
}

/// Graph-cut segmentation seeded by both scribble classes.
pub fn graphcut_segment(pair: &ModalityPair, scribbles: &ScribbleSet, params: &Params) -> Result<Mask> {
    let gp = GraphCutParams::from_params(params);
    let dims = pair.dims();
    let roi = determine_roi(&scribbles.all(), None, gp.roi_expansion, dims).map_err(|e| match e {
        Error::EmptySeeds => Error::EmptyScribbleClass("foreground"),
        e => e,
    })?;
    let model = GraphCutModel::build(pair, scribbles, roi, &gp)?;
    let (labels, _) = model.solve()?;
    let mut out = Mask::empty(dims);
    for (i, l) in roi.indices(dims).zip(labels) {
        out.set(i, l);
    }
    Ok(out)
}

/// Proposes with the uptake threshold; refines with a graph cut seeded by
/// the scribbles recovered from the channels. With only one scribble class
/// the previous mask is returned unchanged.
pub struct GraphCutBackend;

impl Backend for GraphCutBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            name: "graphcut".into(),
            supports_refine: true,
            parameters: [
                ("k".to_string(), DEFAULT_K),
                ("w_pair".to_string(), DEFAULT_W_PAIR),
                ("sigma".to_string(), DEFAULT_SIGMA),
                ("roi_expansion".to_string(), DEFAULT_ROI_EXPANSION),
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
        let seeds = channels.seeds();
        if seeds.foreground.is_empty() || seeds.background.is_empty() {
            return Ok(channels.prev_mask.clone());
        }
        graphcut_segment(pair, &seeds, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{calc_ellipsoid, Ellipsoid};
    use crate::metrics::dice;
    use crate::volume::{Dims, Spacing, Volume};

    fn two_region_pair(d: Dims, region_a: &Mask) -> ModalityPair {
        let ct = Volume::from_fn(d, Spacing::UNIT, |p| if region_a.get_at(p) { 1.0 } else { 0.0 })
            .unwrap();
        ModalityPair::new(ct.clone(), ct).unwrap()
    }

    #[test]
    fn separated_regions_cut_on_boundary() {
        let d = Dims::new(8, 8, 8);
        let a = Mask::from_fn(d, |p| p[0] < 4);
        let pair = two_region_pair(d, &a);
        let blob = |c: [usize; 3]| {
            calc_ellipsoid(&Ellipsoid { center: c, semi_axes: [1.0, 3.0, 3.0] }, d).unwrap()
        };
        let s = ScribbleSet {
            foreground: blob([1, 4, 4]),
            background: blob([6, 4, 4]),
        };
        let out = graphcut_segment(&pair, &s, &Params::new()).unwrap();
        // Oracle: the region itself, checked voxel by voxel.
        for i in 0..d.len() {
            assert_eq!(out.get(i), a.get(i), "voxel {:?}", d.coords(i));
        }
        assert_eq!(dice(&out, &a).unwrap(), 1.0);
    }

    #[test]
    fn constraints_force_labelling() {
        let d = Dims::new(4, 4, 4);
        let pair = two_region_pair(d, &Mask::from_fn(d, |p| p[2] < 2));
        let lone = d.index(2, 1, 3);
        let bg = Mask::from_indices(d, [lone]);
        let fg = bg.complement();
        let out = graphcut_segment(
            &pair,
            &ScribbleSet {
                foreground: fg.clone(),
                background: bg,
            },
            &Params::new(),
        )
        .unwrap();
        assert_eq!(out, fg);
    }

    #[test]
    fn missing_class_is_an_error() {
        let d = Dims::new(4, 4, 4);
        let pair = two_region_pair(d, &Mask::empty(d));
        let s = ScribbleSet {
            foreground: Mask::from_indices(d, [0]),
            background: Mask::empty(d),
        };
        assert!(matches!(
            graphcut_segment(&pair, &s, &Params::new()),
            Err(Error::EmptyScribbleClass("background"))
        ));
    }

    #[test]
    fn cut_value_equals_energy_of_labelling() {
        let d = Dims::new(5, 4, 3);
        let pair = {
            let mut rng = crate::rng::SimRng::new(5);
            let ct = Volume::from_fn(d, Spacing([1.0, 2.0, 0.5]), |_| rng.uniform01() as f32).unwrap();
            ModalityPair::new(ct.clone(), ct).unwrap()
        };
        let s = ScribbleSet {
            foreground: Mask::from_indices(d, [0, 1]),
            background: Mask::from_indices(d, [d.len() - 1]),
        };
        let model =
            GraphCutModel::build(&pair, &s, BoundingBox::full(d), &GraphCutParams::default()).unwrap();
        let (labels, flow) = model.solve().unwrap();
        assert!((model.energy(&labels) - flow).abs() <= 1e-9 * flow.max(1.0));
    }
}
