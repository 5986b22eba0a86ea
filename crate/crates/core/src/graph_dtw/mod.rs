//! Graph-DTW: warping two sequences of scene graphs into one distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{RoadMap, TrackSet};
use crate::scene_graph::{build_scene, SceneError};
use crate::slicing::{AtomScenario, InteractionType};
use crate::tree_metric::{mirrors, root_distance_with, MetricConfig, MetricError, SceneTrees};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtwConfig {
    /// Band half-width in frames along the longer sequence; `None` is
    /// unbounded.
    pub window: Option<usize>,
    /// Keep every `stride`-th frame of a segment.
    pub stride: usize,
}

impl Default for DtwConfig {
    fn default() -> Self {
        DtwConfig {
            window: Some(25),
            stride: 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DtwError {
    #[error("scenario has no frames")]
    EmptyScenario,
    #[error("band of {window} frames cannot connect a {m}x{n} matrix")]
    BandTooNarrow { window: usize, m: usize, n: usize },
    #[error("stride must be >= 1")]
    InvalidStride,
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Whether `(x, y)` lies in the band around the rescaled diagonal of an
/// `m x n` matrix: `|x (n-1) - y (m-1)| <= w * min(m-1, n-1)`, i.e. at most
/// `w` frames off the diagonal measured along the longer axis.
pub fn in_band(x: usize, y: usize, m: usize, n: usize, window: Option<usize>) -> bool {
    let Some(w) = window else { return true };
    let lhs = (x as i128 * (n as i128 - 1) - y as i128 * (m as i128 - 1)).abs();
    lhs <= w as i128 * (m.min(n) as i128 - 1)
}

/// Scene distances between all frame pairs; out-of-band entries are unset
/// and read as +inf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDistanceMatrix {
    pub m: usize,
    pub n: usize,
    data: Vec<Option<f64>>,
}

impl FrameDistanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n), "ragged matrix");
        FrameDistanceMatrix {
            m,
            n,
            data: rows.iter().flatten().map(|&v| Some(v)).collect(),
        }
    }

    pub fn from_fn(m: usize, n: usize, window: Option<usize>, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let data = (0..m)
            .into_par_iter()
            .flat_map_iter(|x| {
                let f = &f;
                (0..n).map(move |y| in_band(x, y, m, n, window).then(|| f(x, y)))
            })
            .collect();
        FrameDistanceMatrix { m, n, data }
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.data[x * self.n + y]
    }

    fn cost(&self, x: usize, y: usize) -> f64 {
        self.get(x, y).unwrap_or(f64::INFINITY)
    }

    pub fn populated(&self) -> usize {
        self.data.iter().filter(|v| v.is_some()).count()
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().flatten().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpResult {
    pub path: Vec<(usize, usize)>,
    pub l_min: f64,
    pub normalized: f64,
}

/// Accumulated-cost DTW restricted to the band, with the path recovered by
/// backtracking. Ties prefer the diagonal step, then `(x-1, y)`, then
/// `(x, y-1)`.
pub fn dtw(mat: &FrameDistanceMatrix, window: Option<usize>) -> Result<WarpResult, DtwError> {
    let (m, n) = (mat.m, mat.n);
    if m == 0 || n == 0 {
        return Err(DtwError::EmptyScenario);
    }
    let inf = f64::INFINITY;
    let mut acc = vec![inf; m * n];
    for x in 0..m {
        for y in 0..n {
            if !in_band(x, y, m, n, window) {
                continue;
            }
            let d = mat.cost(x, y);
            let prev = if x == 0 && y == 0 {
                0.0
            } else {
                let diag = if x > 0 && y > 0 { acc[(x - 1) * n + y - 1] } else { inf };
                let up = if x > 0 { acc[(x - 1) * n + y] } else { inf };
                let left = if y > 0 { acc[x * n + y - 1] } else { inf };
                diag.min(up).min(left)
            };
            acc[x * n + y] = d + prev;
        }
    }
    let l_min = acc[m * n - 1];
    if !l_min.is_finite() {
        return Err(DtwError::BandTooNarrow {
            window: window.unwrap_or(0),
            m,
            n,
        });
    }
    let mut path = vec![(m - 1, n - 1)];
    let (mut x, mut y) = (m - 1, n - 1);
    while x > 0 || y > 0 {
        let diag = if x > 0 && y > 0 { acc[(x - 1) * n + y - 1] } else { inf };
        let up = if x > 0 { acc[(x - 1) * n + y] } else { inf };
        let left = if y > 0 { acc[x * n + y - 1] } else { inf };
        if diag <= up && diag <= left {
            x -= 1;
            y -= 1;
        } else if up <= left {
            x -= 1;
        } else {
            y -= 1;
        }
        path.push((x, y));
    }
    path.reverse();
    Ok(WarpResult {
        path,
        l_min,
        normalized: l_min / m.max(n) as f64,
    })
}

/// Trees of one frame with their blank-mirror distances.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFrame {
    pub frame: i64,
    pub trees: SceneTrees,
    z_v2v: Vec<f64>,
    z_v2n: Vec<f64>,
}

impl EncodedFrame {
    pub fn new(frame: i64, trees: SceneTrees, cfg: &MetricConfig) -> Self {
        EncodedFrame {
            frame,
            z_v2v: mirrors(&trees.v2v, cfg),
            z_v2n: mirrors(&trees.v2n, cfg),
            trees,
        }
    }
}

/// A segment turned into its per-frame computation trees.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedScenario {
    pub id: u64,
    pub itype: InteractionType,
    pub frames: Vec<EncodedFrame>,
}

/// Builds scene graphs and trees for every `stride`-th frame of `atom`
/// (the first frame always included).
pub fn encode(
    atom: &AtomScenario,
    ts: &TrackSet,
    map: &RoadMap,
    metric: &MetricConfig,
    dtw_cfg: &DtwConfig,
) -> Result<EncodedScenario, DtwError> {
    if dtw_cfg.stride == 0 {
        return Err(DtwError::InvalidStride);
    }
    metric.check()?;
    let frames = atom
        .frames()
        .step_by(dtw_cfg.stride)
        .map(|f| {
            let g = build_scene(atom, ts, map, f, metric)?;
            Ok(EncodedFrame::new(f, SceneTrees::expand(&g, metric), metric))
        })
        .collect::<Result<Vec<_>, DtwError>>()?;
    Ok(EncodedScenario {
        id: atom.id,
        itype: atom.itype,
        frames,
    })
}

/// Scene distance between two encoded frames.
pub fn frame_distance(a: &EncodedFrame, b: &EncodedFrame, cfg: &MetricConfig) -> f64 {
    let mut d = 0.0;
    if cfg.lambda_v2v > 0.0 {
        d += cfg.lambda_v2v * root_distance_with(&a.trees.v2v, &a.z_v2v, &b.trees.v2v, &b.z_v2v, cfg);
    }
    if cfg.lambda_v2n > 0.0 {
        d += cfg.lambda_v2n * root_distance_with(&a.trees.v2n, &a.z_v2n, &b.trees.v2n, &b.z_v2n, cfg);
    }
    d
}

pub fn frame_distance_matrix(
    a: &EncodedScenario,
    b: &EncodedScenario,
    window: Option<usize>,
    cfg: &MetricConfig,
) -> Result<FrameDistanceMatrix, DtwError> {
    if a.frames.is_empty() || b.frames.is_empty() {
        return Err(DtwError::EmptyScenario);
    }
    for s in [a, b] {
        for f in &s.frames {
            if f.trees.v2v.depth != cfg.depth {
                return Err(MetricError::DepthMismatch(f.trees.v2v.depth, cfg.depth).into());
            }
        }
    }
    Ok(FrameDistanceMatrix::from_fn(a.frames.len(), b.frames.len(), window, |x, y| {
        frame_distance(&a.frames[x], &b.frames[y], cfg)
    }))
}

/// Normalized Graph-DTW distance between two segments.
pub fn scenario_distance(
    a: &EncodedScenario,
    b: &EncodedScenario,
    dtw_cfg: &DtwConfig,
    cfg: &MetricConfig,
) -> Result<f64, DtwError> {
    if a.itype != b.itype {
        log::warn!("comparing scenarios {} and {} of different types", a.id, b.id);
    }
    let mat = frame_distance_matrix(a, b, dtw_cfg.window, cfg)?;
    Ok(dtw(&mat, dtw_cfg.window)?.normalized)
}
