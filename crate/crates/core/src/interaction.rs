//! Ellipsoid annotation sampling and the corrective simulated annotator.

use serde::{Deserialize, Serialize};

use crate::bbox::{bbox_of_mask, expand_bbox, BoundingBox};
use crate::components::{interior_depth, label_components};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::volume::{Dims, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScribbleClass {
    Foreground,
    Background,
}

impl ScribbleClass {
    pub fn name(self) -> &'static str {
        match self {
            ScribbleClass::Foreground => "foreground",
            ScribbleClass::Background => "background",
        }
    }
}

/// Which voxels of the expanded box are valid background centres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginRule {
    /// Everything in the expanded box that is not ground-truth foreground.
    #[default]
    ExcludeForeground,
    /// Only the shell between the expanded and the tight bounding box.
    ExcludeBoundingBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    /// Semi-axis scale as a fraction of the volume extent per axis.
    pub alpha: f64,
    /// Growth factor of the ground-truth box for background centres.
    pub beta: f64,
    /// Lower bound on every semi-axis, in voxels.
    pub min_axis: f64,
    pub fg_count_range: [u32; 2],
    pub bg_count_range: [u32; 2],
    pub rng_seed: u64,
    pub margin_rule: MarginRule,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            alpha: 0.05,
            beta: 2.0,
            min_axis: 2.0,
            fg_count_range: [1, 3],
            bg_count_range: [0, 1],
            rng_seed: 0,
            margin_rule: MarginRule::ExcludeForeground,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.alpha > 0.0) {
            return bad("alpha must be > 0");
        }
        if !(self.beta >= 1.0) {
            return bad("beta must be >= 1");
        }
        if !(self.min_axis >= 1.0) {
            return bad("min_axis must be >= 1");
        }
        for r in [self.fg_count_range, self.bg_count_range] {
            if r[0] > r[1] {
                return bad("count range is empty");
            }
        }
        Ok(())
    }

    pub fn rng(&self) -> SimRng {
        SimRng::new(self.rng_seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: [usize; 3],
    pub semi_axes: [f64; 3],
}

/// User (or simulated) scribbles, one mask per class, never overlapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScribbleSet {
    pub foreground: Mask,
    pub background: Mask,
}

impl ScribbleSet {
    pub fn empty(dims: Dims) -> Self {
        ScribbleSet {
            foreground: Mask::empty(dims),
            background: Mask::empty(dims),
        }
    }

    /// Builds a set from possibly overlapping masks; overlaps become foreground.
    pub fn foreground_wins(foreground: Mask, background: Mask) -> Result<Self> {
        let background = background.difference(&foreground)?;
        Ok(ScribbleSet {
            foreground,
            background,
        })
    }

    pub fn dims(&self) -> Dims {
        self.foreground.dims()
    }

    pub fn is_empty(&self) -> bool {
        self.foreground.is_empty() && self.background.is_empty()
    }

    pub fn class_mask(&self, class: ScribbleClass) -> &Mask {
        match class {
            ScribbleClass::Foreground => &self.foreground,
            ScribbleClass::Background => &self.background,
        }
    }

    /// Union of both classes.
    pub fn all(&self) -> Mask {
        self.foreground
            .union(&self.background)
            .expect("classes share dims")
    }

    /// Merges a newer delta: each voxel in `delta` takes the delta's class.
    pub fn apply(&mut self, delta: &ScribbleSet) -> Result<()> {
        delta.foreground.ensure_same_dims(self.dims())?;
        for i in delta.foreground.indices() {
            self.foreground.set(i, true);
            self.background.set(i, false);
        }
        for i in delta.background.indices() {
            self.background.set(i, true);
            self.foreground.set(i, false);
        }
        Ok(())
    }
}

/// Voxels `v` with `Σ ((v_k - p_k) / a_k)² <= 1`, clipped to `dims`.
pub fn calc_ellipsoid(e: &Ellipsoid, dims: Dims) -> Result<Mask> {
    if !dims.contains(e.center) {
        return Err(Error::CenterOutside {
            center: e.center,
            dims,
        });
    }
    if e.semi_axes.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidConfig(format!("semi-axes {:?}", e.semi_axes)));
    }
    let mut mask = Mask::empty(dims);
    let range = |k: usize| {
        let reach = e.semi_axes[k].floor() as usize;
        let lo = e.center[k].saturating_sub(reach);
        let hi = (e.center[k] + reach).min(dims[k] - 1);
        lo..=hi
    };
    for z in range(2) {
        for y in range(1) {
            for x in range(0) {
                let p = [x, y, z];
                let r: f64 = (0..3)
                    .map(|k| {
                        let t = (p[k] as f64 - e.center[k] as f64) / e.semi_axes[k];
                        t * t
                    })
                    .sum();
                if r <= 1.0 {
                    mask.set(dims.index(x, y, z), true);
                }
            }
        }
    }
    Ok(mask)
}

/// Voxels inside `expanded` that are valid background centres for `gt`.
pub fn clip_margin(expanded: &BoundingBox, gt: &Mask, rule: MarginRule) -> Result<Vec<usize>> {
    let dims = gt.dims();
    let tight = match rule {
        MarginRule::ExcludeForeground => None,
        MarginRule::ExcludeBoundingBox => Some(bbox_of_mask(gt)?),
    };
    let out: Vec<usize> = expanded
        .indices(dims)
        .filter(|&i| !gt.get(i))
        .filter(|&i| tight.is_none_or(|t| !t.contains(dims.coords(i))))
        .collect();
    if out.is_empty() {
        return Err(Error::EmptyMargin);
    }
    Ok(out)
}

/// Candidate centre positions for one annotation class.
pub fn candidate_centers(gt: &Mask, cfg: &SimulationConfig, kind: ScribbleClass) -> Result<Vec<usize>> {
    match kind {
        ScribbleClass::Foreground => {
            let c: Vec<usize> = gt.indices().collect();
            if c.is_empty() {
                return Err(Error::EmptyMask);
            }
            Ok(c)
        }
        ScribbleClass::Background => {
            let expanded = expand_bbox(&bbox_of_mask(gt)?, cfg.beta, gt.dims());
            clip_margin(&expanded, gt, cfg.margin_rule)
        }
    }
}

/// Draws one ellipsoid: a uniformly chosen centre from the class candidates
/// and semi-axes `max(min_axis, r_k · alpha · dim_k)` with `r ~ U(0,1)³`.
pub fn sample_ellipsoid(
    gt: &Mask,
    cfg: &SimulationConfig,
    kind: ScribbleClass,
    rng: &mut SimRng,
) -> Result<Ellipsoid> {
    let candidates = candidate_centers(gt, cfg, kind)?;
    Ok(ellipsoid_from_candidates(&candidates, gt.dims(), cfg, rng))
}

fn ellipsoid_from_candidates(
    candidates: &[usize],
    dims: Dims,
    cfg: &SimulationConfig,
    rng: &mut SimRng,
) -> Ellipsoid {
    let center = dims.coords(*rng.choose(candidates));
    let r = [rng.uniform01(), rng.uniform01(), rng.uniform01()];
    let semi_axes = std::array::from_fn(|k| cfg.min_axis.max(r[k] * cfg.alpha * dims[k] as f64));
    Ellipsoid { center, semi_axes }
}

/// One simulated annotation of the given class, as a voxel mask.
pub fn sample_user_input(
    gt: &Mask,
    image_dims: Dims,
    cfg: &SimulationConfig,
    kind: ScribbleClass,
    rng: &mut SimRng,
) -> Result<Mask> {
    gt.ensure_same_dims(image_dims)?;
    calc_ellipsoid(&sample_ellipsoid(gt, cfg, kind, rng)?, image_dims)
}

/// Output of [`simulate_training_annotations_detailed`].
#[derive(Debug, Clone)]
pub struct TrainingAnnotations {
    pub scribbles: ScribbleSet,
    pub foreground: Vec<Ellipsoid>,
    pub background: Vec<Ellipsoid>,
}

pub fn simulate_training_annotations(
    gt: &Mask,
    dims: Dims,
    cfg: &SimulationConfig,
    rng: &mut SimRng,
) -> Result<ScribbleSet> {
    simulate_training_annotations_detailed(gt, dims, cfg, rng).map(|t| t.scribbles)
}

/// Draws `n_fg` foreground and `n_bg` background ellipsoids, with the counts
/// uniform over the configured ranges. Background voxels that fall on the
/// ground truth or on a foreground scribble are dropped. If no background
/// centre exists, `n_bg` is lowered to zero.
pub fn simulate_training_annotations_detailed(
    gt: &Mask,
    dims: Dims,
    cfg: &SimulationConfig,
    rng: &mut SimRng,
) -> Result<TrainingAnnotations> {
    cfg.validate()?;
    gt.ensure_same_dims(dims)?;
    let n_fg = rng.range_inclusive(cfg.fg_count_range[0], cfg.fg_count_range[1]);
    let n_bg = rng.range_inclusive(cfg.bg_count_range[0], cfg.bg_count_range[1]);

    let fg_candidates = candidate_centers(gt, cfg, ScribbleClass::Foreground)?;
    let mut foreground = Mask::empty(dims);
    let mut fg_ellipsoids = Vec::with_capacity(n_fg as usize);
    for _ in 0..n_fg {
        let e = ellipsoid_from_candidates(&fg_candidates, dims, cfg, rng);
        for i in calc_ellipsoid(&e, dims)?.indices() {
            foreground.set(i, true);
        }
        fg_ellipsoids.push(e);
    }

    let mut background = Mask::empty(dims);
    let mut bg_ellipsoids = Vec::new();
    if n_bg > 0 {
        match candidate_centers(gt, cfg, ScribbleClass::Background) {
            Ok(bg_candidates) => {
                for _ in 0..n_bg {
                    let e = ellipsoid_from_candidates(&bg_candidates, dims, cfg, rng);
                    for i in calc_ellipsoid(&e, dims)?.indices() {
                        background.set(i, true);
                    }
                    bg_ellipsoids.push(e);
                }
            }
            Err(Error::EmptyMargin) => {
                tracing::warn!("no background margin around the ground truth; skipping background annotations");
            }
            Err(e) => return Err(e),
        }
    }
    let background = background.difference(gt)?.difference(&foreground)?;
    Ok(TrainingAnnotations {
        scribbles: ScribbleSet {
            foreground,
            background,
        },
        foreground: fg_ellipsoids,
        background: bg_ellipsoids,
    })
}

/// Places a sphere at the most interior voxel of the largest component of
/// `error`, ties broken by `rng`, then clips it to `allowed`.
fn correct_largest(
    error: &Mask,
    allowed: &Mask,
    cfg: &SimulationConfig,
    rng: &mut SimRng,
) -> Result<Option<(Ellipsoid, Mask)>> {
    let comps = label_components(error);
    let Some(id) = comps.largest() else {
        return Ok(None);
    };
    let component = comps.mask_of(error, id);
    let depth = interior_depth(&component);
    let deepest = component.indices().map(|i| depth[i]).max().unwrap_or(1);
    let centers: Vec<usize> = component.indices().filter(|&i| depth[i] == deepest).collect();
    let dims = error.dims();
    let radius = cfg.min_axis.max(deepest as f64);
    let e = Ellipsoid {
        center: dims.coords(*rng.choose(&centers)),
        semi_axes: [radius; 3],
    };
    let mask = calc_ellipsoid(&e, dims)?.intersection(allowed)?;
    Ok(Some((e, mask)))
}

/// One round of corrective scribbling: a foreground sphere inside the largest
/// false-negative component and a background sphere inside the largest
/// false-positive component. Foreground is clipped to `gt`, background to its
/// complement. Returns only the new scribbles.
pub fn corrective_annotator_step(
    gt: &Mask,
    prediction: &Mask,
    cfg: &SimulationConfig,
    rng: &mut SimRng,
) -> Result<ScribbleSet> {
    prediction.ensure_same_dims(gt.dims())?;
    let false_neg = gt.difference(prediction)?;
    let false_pos = prediction.difference(gt)?;
    let mut delta = ScribbleSet::empty(gt.dims());
    if let Some((_, m)) = correct_largest(&false_neg, gt, cfg, rng)? {
        delta.foreground = m;
    }
    if let Some((_, m)) = correct_largest(&false_pos, &gt.complement(), cfg, rng)? {
        delta.background = m;
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(dims: Dims, lo: usize, hi: usize) -> Mask {
        Mask::from_fn(dims, |p| p.iter().all(|&c| (lo..hi).contains(&c)))
    }

    #[test]
    fn sub_voxel_ellipsoid_is_center_only() {
        let d = Dims::new(5, 5, 5);
        let e = Ellipsoid {
            center: [2, 2, 2],
            semi_axes: [0.9; 3],
        };
        assert_eq!(calc_ellipsoid(&e, d).unwrap(), Mask::from_indices(d, [d.index(2, 2, 2)]));
    }

    #[test]
    fn unit_ellipsoid_has_seven_voxels() {
        let d = Dims::new(5, 5, 5);
        let e = Ellipsoid {
            center: [2, 2, 2],
            semi_axes: [1.0; 3],
        };
        // Oracle: enumerate the 3x3x3 neighbourhood.
        let mut expected = 0;
        for dz in -1i32..=1 {
            for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    if dx * dx + dy * dy + dz * dz <= 1 {
                        expected += 1;
                    }
                }
            }
        }
        let m = calc_ellipsoid(&e, d).unwrap();
        assert_eq!(m.count(), expected);
        assert_eq!(m.count(), 7);
    }

    #[test]
    fn corner_ellipsoid_is_clipped() {
        let d = Dims::new(6, 6, 6);
        let e = Ellipsoid {
            center: [0, 0, 0],
            semi_axes: [2.5, 2.5, 2.5],
        };
        let m = calc_ellipsoid(&e, d).unwrap();
        let expected = Mask::from_fn(d, |p| {
            p.iter().map(|&c| (c as f64 / 2.5).powi(2)).sum::<f64>() <= 1.0
        });
        assert_eq!(m, expected);
        assert!(calc_ellipsoid(
            &Ellipsoid {
                center: [6, 0, 0],
                semi_axes: [1.0; 3]
            },
            d
        )
        .is_err());
    }

    #[test]
    fn margin_cases() {
        let d = Dims::new(9, 9, 9);
        let gt = Mask::from_indices(d, [d.index(4, 4, 4)]);
        let bb = expand_bbox(&bbox_of_mask(&gt).unwrap(), 3.0, d);
        let c = clip_margin(&bb, &gt, MarginRule::ExcludeForeground).unwrap();
        assert_eq!(c.len(), bb.voxel_count() - 1);
        assert!(!c.contains(&d.index(4, 4, 4)));

        let full = Mask::full(d);
        assert!(matches!(
            clip_margin(&BoundingBox::full(d), &full, MarginRule::ExcludeForeground),
            Err(Error::EmptyMargin)
        ));

        let d16 = Dims::new(16, 16, 16);
        let gt = cube(d16, 6, 10);
        let bb = expand_bbox(&bbox_of_mask(&gt).unwrap(), 2.0, d16);
        let c = clip_margin(&bb, &gt, MarginRule::ExcludeForeground).unwrap();
        let oracle = bb.indices(d16).filter(|&i| !gt.get(i)).count();
        assert_eq!(c.len(), oracle);
        assert_eq!(c.len(), bb.voxel_count() - 64);
        assert!(c.iter().all(|&i| !gt.get(i)));
    }

    #[test]
    fn stricter_margin_excludes_tight_box() {
        let d = Dims::new(16, 16, 16);
        // An L-shaped gt leaves non-foreground voxels inside its tight box.
        let gt = Mask::from_fn(d, |p| (6..10).contains(&p[2]) && (6..10).contains(&p[1]) && (6..8).contains(&p[0])
            || (6..10).contains(&p[2]) && (6..8).contains(&p[1]) && (6..10).contains(&p[0]));
        let bb = expand_bbox(&bbox_of_mask(&gt).unwrap(), 2.0, d);
        let tight = bbox_of_mask(&gt).unwrap();
        let strict = clip_margin(&bb, &gt, MarginRule::ExcludeBoundingBox).unwrap();
        let loose = clip_margin(&bb, &gt, MarginRule::ExcludeForeground).unwrap();
        assert!(strict.iter().all(|&i| !tight.contains(d.coords(i))));
        assert!(strict.len() < loose.len());
    }

    #[test]
    fn singleton_gt_centers_foreground() {
        let d = Dims::new(10, 10, 10);
        let gt = Mask::from_indices(d, [d.index(3, 4, 5)]);
        let cfg = SimulationConfig::default();
        let mut rng = SimRng::new(1);
        for _ in 0..10 {
            let e = sample_ellipsoid(&gt, &cfg, ScribbleClass::Foreground, &mut rng).unwrap();
            assert_eq!(e.center, [3, 4, 5]);
        }
    }

    #[test]
    fn degenerate_count_ranges() {
        let d = Dims::new(40, 40, 40);
        let gt = cube(d, 15, 25);
        let cfg = SimulationConfig {
            fg_count_range: [1, 1],
            bg_count_range: [0, 0],
            ..Default::default()
        };
        let t = simulate_training_annotations_detailed(&gt, d, &cfg, &mut SimRng::new(3)).unwrap();
        assert_eq!(t.foreground.len(), 1);
        assert!(t.background.is_empty());
        assert!(t.scribbles.background.is_empty());
        assert_eq!(t.scribbles.foreground, calc_ellipsoid(&t.foreground[0], d).unwrap());
    }

    #[test]
    fn empty_margin_downgrades_background() {
        let d = Dims::new(4, 4, 4);
        let gt = Mask::full(d);
        let cfg = SimulationConfig {
            bg_count_range: [1, 1],
            ..Default::default()
        };
        let t = simulate_training_annotations_detailed(&gt, d, &cfg, &mut SimRng::new(0)).unwrap();
        assert!(t.background.is_empty());
    }

    #[test]
    fn corrective_no_error_is_empty() {
        let d = Dims::new(8, 8, 8);
        let gt = cube(d, 2, 6);
        let delta =
            corrective_annotator_step(&gt, &gt, &SimulationConfig::default(), &mut SimRng::new(0))
                .unwrap();
        assert!(delta.is_empty());
    }

    #[test]
    fn corrective_missed_blob_gets_foreground() {
        let d = Dims::new(12, 12, 12);
        let gt = cube(d, 3, 9);
        let delta = corrective_annotator_step(
            &gt,
            &Mask::empty(d),
            &SimulationConfig::default(),
            &mut SimRng::new(0),
        )
        .unwrap();
        assert!(!delta.foreground.is_empty());
        assert!(delta.background.is_empty());
        assert!(delta.foreground.difference(&gt).unwrap().is_empty());
    }

    #[test]
    fn corrective_separate_false_blob_gets_background() {
        let d = Dims::new(16, 8, 8);
        let gt = Mask::from_fn(d, |p| p[0] < 5 && (2..6).contains(&p[1]) && (2..6).contains(&p[2]));
        let blob = Mask::from_fn(d, |p| (10..14).contains(&p[0]) && (2..6).contains(&p[1]) && (2..6).contains(&p[2]));
        let small = Mask::from_indices(d, [d.index(15, 0, 0)]);
        let pred = gt.union(&blob).unwrap().union(&small).unwrap();
        let delta =
            corrective_annotator_step(&gt, &pred, &SimulationConfig::default(), &mut SimRng::new(0))
                .unwrap();
        assert!(delta.foreground.is_empty());
        assert!(!delta.background.is_empty());
        // The largest false-positive component is the blob; the centre lies in it.
        let c = label_components(&pred.difference(&gt).unwrap());
        let biggest = c.mask_of(&pred, c.largest().unwrap());
        assert_eq!(biggest, blob);
        assert!(delta.background.intersection_count(&blob).unwrap() > 0);
        assert!(delta.background.intersection_count(&gt).unwrap() == 0);
    }

    #[test]
    fn apply_is_later_wins() {
        let d = Dims::new(4, 1, 1);
        let mut s = ScribbleSet::empty(d);
        s.apply(&ScribbleSet {
            foreground: Mask::empty(d),
            background: Mask::from_indices(d, [1]),
        })
        .unwrap();
        s.apply(&ScribbleSet {
            foreground: Mask::from_indices(d, [1]),
            background: Mask::empty(d),
        })
        .unwrap();
        assert!(s.foreground.get(1));
        assert!(!s.background.get(1));
    }
}
