//! Scene distance: node features, exact transport between padded child
//! sets, and the level-recursive tree distance.

mod ot;

use serde::{Deserialize, Serialize};

use crate::geometry::{Polygon, Polyline, Vec2};
use crate::scene_graph::{expand_tree, ComputationTree, SceneGraph, TreeKind};

pub use ot::{ot_assignment, CostMatrix, TransportPlan};
pub(crate) use ot::ot_cost;

/// `(v / dr, (v - v_ego) / dr, (v^2 - v_ego^2) / dr)`.
pub type FeatureVec = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// Tree depth L, counting the root level.
    pub depth: usize,
    /// `layer_weights[l - 1]` scales the child transport term of a node at
    /// level `l`.
    pub layer_weights: Vec<f64>,
    pub lambda_v2v: f64,
    pub lambda_v2n: f64,
    /// Distance floor for vehicle features, meters.
    pub dr_min: f64,
    /// Distance floor for road node features, meters.
    pub road_dr_min: f64,
    /// Non-ego vehicle pairs closer than this get a V2V edge, meters.
    pub neighbor_radius: f64,
    /// Reach of the "approaching" road link, meters.
    pub approach_distance: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            depth: 3,
            layer_weights: vec![1.0; 4],
            lambda_v2v: 0.5,
            lambda_v2n: 0.5,
            dr_min: 0.1,
            road_dr_min: 5.0,
            neighbor_radius: 50.0,
            approach_distance: 30.0,
        }
    }
}

impl MetricConfig {
    pub fn check(&self) -> Result<(), MetricError> {
        let bad = |m: &str| Err(MetricError::InvalidConfig(m.into()));
        if self.depth == 0 {
            return bad("depth must be >= 1");
        }
        if self.layer_weights.len() + 1 < self.depth {
            return bad("need one layer weight per non-leaf level");
        }
        if self.layer_weights.iter().any(|w| !(*w > 0.0)) {
            return bad("layer weights must be positive");
        }
        if !(self.lambda_v2v >= 0.0 && self.lambda_v2n >= 0.0) || (self.lambda_v2v + self.lambda_v2n - 1.0).abs() > 1e-9 {
            return bad("lambda_v2v + lambda_v2n must be 1");
        }
        if !(self.dr_min > 0.0 && self.road_dr_min > 0.0) {
            return bad("distance floors must be positive");
        }
        if !(self.neighbor_radius >= 0.0 && self.approach_distance >= 0.0) {
            return bad("radii must be non-negative");
        }
        Ok(())
    }

    fn weight(&self, level: usize) -> f64 {
        self.layer_weights.get(level - 1).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("cost matrix is {rows}x{cols}, expected square and non-empty")]
    NonSquare { rows: usize, cols: usize },
    #[error("cost matrix has a non-finite entry")]
    NonFinite,
    #[error("tree kinds differ: {0:?} vs {1:?}")]
    KindMismatch(TreeKind, TreeKind),
    #[error("tree depths differ: {0} vs {1}")]
    DepthMismatch(usize, usize),
    #[error("paths share no conflict point")]
    NoCommonConflict,
    #[error("invalid metric config: {0}")]
    InvalidConfig(String),
}

pub fn node_feature(v: f64, v_ego: f64, dr: f64, cfg: &MetricConfig) -> FeatureVec {
    let r = dr.max(cfg.dr_min);
    [v / r, (v - v_ego) / r, (v * v - v_ego * v_ego) / r]
}

pub fn road_feature(dr: f64, node_type: u32, cfg: &MetricConfig) -> FeatureVec {
    [1.0 / dr.max(cfg.road_dr_min), node_type as f64, 0.0]
}

fn norm(f: &FeatureVec) -> f64 {
    (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt()
}

fn diff_norm(a: &FeatureVec, b: &FeatureVec) -> f64 {
    norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Distance of each subtree to its all-blank mirror, indexed by arena slot.
pub(crate) fn mirrors(t: &ComputationTree, cfg: &MetricConfig) -> Vec<f64> {
    let mut z = vec![0.0; t.nodes.len()];
    // Children always sit at higher arena indices than their parent.
    for i in (0..t.nodes.len()).rev() {
        let n = &t.nodes[i];
        let mut d = norm(&n.feature);
        if !n.children.is_empty() {
            let sum: f64 = n.children.iter().map(|&c| z[c]).sum();
            d += cfg.weight(n.level) * sum / n.children.len() as f64;
        }
        z[i] = d;
    }
    z
}

struct Pair<'a> {
    a: &'a ComputationTree,
    b: &'a ComputationTree,
    za: &'a [f64],
    zb: &'a [f64],
    cfg: &'a MetricConfig,
}

impl Pair<'_> {
    fn children_ot(&self, ca: &[usize], cb: &[usize]) -> f64 {
        let n = ca.len().max(cb.len());
        if n == 0 {
            return 0.0;
        }
        let c = CostMatrix::from_fn(n, |i, j| match (ca.get(i), cb.get(j)) {
            (Some(&x), Some(&y)) => self.node(x, y),
            (Some(&x), None) => self.za[x],
            (None, Some(&y)) => self.zb[y],
            (None, None) => 0.0,
        });
        ot_cost(&c)
    }

    fn node(&self, ia: usize, ib: usize) -> f64 {
        let na = &self.a.nodes[ia];
        let nb = &self.b.nodes[ib];
        let mut d = diff_norm(&na.feature, &nb.feature);
        if !(na.children.is_empty() && nb.children.is_empty()) {
            d += self.cfg.weight(na.level) * self.children_ot(&na.children, &nb.children);
        }
        d
    }
}

fn same_shape(a: &ComputationTree, b: &ComputationTree) -> Result<(), MetricError> {
    if a.kind != b.kind {
        return Err(MetricError::KindMismatch(a.kind, b.kind));
    }
    if a.depth != b.depth {
        return Err(MetricError::DepthMismatch(a.depth, b.depth));
    }
    Ok(())
}

/// Root-to-root distance: feature gap plus the weighted transport cost
/// between blank-padded child sets, recursively.
pub fn tree_distance(a: &ComputationTree, b: &ComputationTree, cfg: &MetricConfig) -> Result<f64, MetricError> {
    same_shape(a, b)?;
    let (za, zb) = (mirrors(a, cfg), mirrors(b, cfg));
    Ok(Pair { a, b, za: &za, zb: &zb, cfg }.node(0, 0))
}

/// Transport cost between the two roots' child sets.
pub fn root_distance(a: &ComputationTree, b: &ComputationTree, cfg: &MetricConfig) -> Result<f64, MetricError> {
    same_shape(a, b)?;
    let (za, zb) = (mirrors(a, cfg), mirrors(b, cfg));
    Ok(root_distance_with(a, &za, b, &zb, cfg))
}

pub(crate) fn root_distance_with(a: &ComputationTree, za: &[f64], b: &ComputationTree, zb: &[f64], cfg: &MetricConfig) -> f64 {
    Pair { a, b, za, zb, cfg }.children_ot(&a.nodes[0].children, &b.nodes[0].children)
}

/// Both computation trees of one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTrees {
    pub v2v: ComputationTree,
    pub v2n: ComputationTree,
}

impl SceneTrees {
    pub fn expand(g: &SceneGraph, cfg: &MetricConfig) -> SceneTrees {
        SceneTrees {
            v2v: expand_tree(g, TreeKind::V2V, cfg.depth, cfg),
            v2n: expand_tree(g, TreeKind::V2N, cfg.depth, cfg),
        }
    }
}

/// Weighted sum of the V2V and V2N root distances.
pub fn trees_distance(a: &SceneTrees, b: &SceneTrees, cfg: &MetricConfig) -> Result<f64, MetricError> {
    let mut d = 0.0;
    if cfg.lambda_v2v > 0.0 {
        d += cfg.lambda_v2v * root_distance(&a.v2v, &b.v2v, cfg)?;
    }
    if cfg.lambda_v2n > 0.0 {
        d += cfg.lambda_v2n * root_distance(&a.v2n, &b.v2n, cfg)?;
    }
    Ok(d)
}

pub fn scene_distance(a: &SceneGraph, b: &SceneGraph, cfg: &MetricConfig) -> Result<f64, MetricError> {
    trees_distance(&SceneTrees::expand(a, cfg), &SceneTrees::expand(b, cfg), cfg)
}

/// A vehicle's current state and recorded future path.
#[derive(Debug, Clone, Copy)]
pub struct PathState<'a> {
    pub path: &'a Polyline,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VirtualLeader {
    /// Virtual vehicle `dr` meters ahead of the ego on its own path.
    Mapped { dr: f64, v_virtual: f64 },
    /// The other vehicle already cleared the conflict point.
    Resolved,
}

/// Point tolerance for treating two paths as touching, meters.
const PATH_TOUCH: f64 = 0.5;

/// Arc positions on `ego` and `other` of the first point of `other` that
/// comes within the touch tolerance of `ego`, or of the first crossing.
fn common_point(ego: &Polyline, other: &Polyline) -> Option<(f64, f64)> {
    let pts = other.points();
    let mut s_o = 0.0;
    for (k, &p) in pts.iter().enumerate() {
        if k > 0 {
            let a = pts[k - 1];
            s_o += a.dist(p);
            // A crossing between two samples is found before the touch test on `p`.
            let e = ego.points();
            for w in e.windows(2) {
                if let Some(x) = seg_cross(a, p, w[0], w[1]) {
                    return Some((ego.project(x).s, s_o - p.dist(x)));
                }
            }
        }
        let pr = ego.project(p);
        if pr.dist <= PATH_TOUCH {
            return Some((pr.s, s_o));
        }
    }
    None
}

fn seg_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<Vec2> {
    let r = b - a;
    let s = d - c;
    let den = r.cross(s);
    if den.abs() < 1e-12 {
        return None;
    }
    let t = (c - a).cross(s) / den;
    let u = (c - a).cross(r) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| a + r.scale(t))
}

fn first_inside(path: &Polyline, zone: &Polygon) -> Option<f64> {
    let pts = path.points();
    let mut s = 0.0;
    for (k, &p) in pts.iter().enumerate() {
        if k > 0 {
            s += pts[k - 1].dist(p);
        }
        if zone.contains(p) {
            return Some(s);
        }
    }
    None
}

/// Maps `other` onto the ego path as a virtual leader. With a zone the
/// conflict point is where each path first enters it; without one it is
/// the first point where the paths meet. `dr = s_ego - s_other`.
pub fn virtual_map(ego: PathState, other: PathState, zone: Option<&Polygon>) -> Result<VirtualLeader, MetricError> {
    let (s_e, s_o) = match zone {
        Some(z) => match (first_inside(ego.path, z), first_inside(other.path, z)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(MetricError::NoCommonConflict),
        },
        None => common_point(ego.path, other.path).ok_or(MetricError::NoCommonConflict)?,
    };
    let dr = s_e - s_o;
    Ok(if dr <= 0.0 {
        VirtualLeader::Resolved
    } else {
        VirtualLeader::Mapped {
            dr,
            v_virtual: other.speed,
        }
    })
}
