//! Slow reference implementations used only by tests.
#![allow(dead_code)]

use itertools::Itertools;
use rand::Rng;
use scn_core::graph_dtw::{EncodedFrame, EncodedScenario};
use scn_core::scene_graph::{ComputationTree, TreeKind, TreeNode};
use scn_core::slicing::InteractionType;
use scn_core::tree_metric::{MetricConfig, SceneTrees};

/// Minimum of `sum_i c[i][p(i)] / n` over all permutations `p`.
pub fn perm_min(c: &[Vec<f64>]) -> f64 {
    let n = c.len();
    (0..n)
        .permutations(n)
        .map(|p| p.iter().enumerate().map(|(i, &j)| c[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        / n as f64
}

/// Plain nested tree. A blank is a zero feature with no children.
#[derive(Debug, Clone, PartialEq)]
pub struct OTree {
    pub f: [f64; 3],
    pub kids: Vec<OTree>,
}

impl OTree {
    pub fn blank() -> OTree {
        OTree { f: [0.0; 3], kids: vec![] }
    }

    pub fn count(&self) -> usize {
        1 + self.kids.iter().map(OTree::count).sum::<usize>()
    }
}

/// Tree distance by direct recursion: child sets are padded with explicit
/// blank trees and matched by enumerating every permutation.
pub fn tree_oracle(a: &OTree, b: &OTree, level: usize, w: &[f64]) -> f64 {
    let diff = ((a.f[0] - b.f[0]).powi(2) + (a.f[1] - b.f[1]).powi(2) + (a.f[2] - b.f[2]).powi(2)).sqrt();
    if a.kids.is_empty() && b.kids.is_empty() {
        return diff;
    }
    diff + w[level - 1] * children_oracle(a, b, level, w)
}

pub fn children_oracle(a: &OTree, b: &OTree, level: usize, w: &[f64]) -> f64 {
    let n = a.kids.len().max(b.kids.len());
    if n == 0 {
        return 0.0;
    }
    let pad = |k: &[OTree]| {
        let mut v = k.to_vec();
        v.resize(n, OTree::blank());
        v
    };
    let (ka, kb) = (pad(&a.kids), pad(&b.kids));
    let c: Vec<Vec<f64>> = ka
        .iter()
        .map(|x| kb.iter().map(|y| tree_oracle(x, y, level + 1, w)).collect())
        .collect();
    perm_min(&c)
}

/// Arena form with every parent ahead of its children.
pub fn to_arena(t: &OTree, kind: TreeKind, depth: usize) -> ComputationTree {
    let mut nodes = Vec::new();
    fn push(t: &OTree, level: usize, nodes: &mut Vec<TreeNode>) -> usize {
        let at = nodes.len();
        nodes.push(TreeNode {
            feature: t.f,
            children: vec![],
            blank: false,
            level,
            source: None,
        });
        let kids: Vec<usize> = t.kids.iter().map(|k| push(k, level + 1, nodes)).collect();
        nodes[at].children = kids;
        at
    }
    push(t, 1, &mut nodes);
    ComputationTree { kind, depth, nodes }
}

pub fn random_tree<R: Rng>(rng: &mut R, level: usize, depth: usize, branching: usize) -> OTree {
    let f = if level == 1 {
        [0.0; 3]
    } else {
        [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]
    };
    let kids = if level < depth {
        let k = rng.random_range(0..=branching);
        (0..k).map(|_| random_tree(rng, level + 1, depth, branching)).collect()
    } else {
        vec![]
    };
    OTree { f, kids }
}

/// Exhaustive minimum over monotone corner-to-corner paths. Costs are
/// accumulated from the start corner so the sum order matches a forward
/// recurrence.
pub fn dtw_oracle(d: &[Vec<f64>]) -> f64 {
    fn go(d: &[Vec<f64>], x: usize, y: usize, acc: f64) -> f64 {
        let (m, n) = (d.len(), d[0].len());
        let acc = acc + d[x][y];
        if x == m - 1 && y == n - 1 {
            return acc;
        }
        let mut best = f64::INFINITY;
        if x + 1 < m {
            best = best.min(go(d, x + 1, y, acc));
        }
        if y + 1 < n {
            best = best.min(go(d, x, y + 1, acc));
        }
        if x + 1 < m && y + 1 < n {
            best = best.min(go(d, x + 1, y + 1, acc));
        }
        best
    }
    go(d, 0, 0, 0.0)
}

pub fn random_matrix<R: Rng>(rng: &mut R, m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..m).map(|_| (0..n).map(|_| rng.random_range(0.0..10.0)).collect()).collect()
}

/// Random scene trees of depth 3 with branching up to 4.
pub fn random_scene<R: Rng>(rng: &mut R, cfg: &MetricConfig) -> SceneTrees {
    SceneTrees {
        v2v: to_arena(&random_tree(rng, 1, cfg.depth, 4), TreeKind::V2V, cfg.depth),
        v2n: to_arena(&random_tree(rng, 1, cfg.depth, 4), TreeKind::V2N, cfg.depth),
    }
}

/// Random scenario: a few base scenes, each held for a random number of
/// frames.
pub fn random_scenario<R: Rng>(rng: &mut R, id: u64, cfg: &MetricConfig) -> EncodedScenario {
    let bases = rng.random_range(1..5);
    let mut frames = Vec::new();
    for _ in 0..bases {
        let s = random_scene(rng, cfg);
        for _ in 0..rng.random_range(1..6) {
            frames.push(EncodedFrame::new(frames.len() as i64, s.clone(), cfg));
        }
    }
    EncodedScenario {
        id,
        itype: InteractionType::FollowingLine,
        frames,
    }
}

/// Every frame repeated `k` times.
pub fn dilate(s: &EncodedScenario, k: usize, cfg: &MetricConfig) -> EncodedScenario {
    let frames = s
        .frames
        .iter()
        .flat_map(|f| std::iter::repeat_n(f.trees.clone(), k))
        .enumerate()
        .map(|(i, t)| EncodedFrame::new(i as i64, t, cfg))
        .collect();
    EncodedScenario {
        id: s.id,
        itype: s.itype,
        frames,
    }
}

/// Pairwise Euclidean distances of planar points.
pub fn planar_distances(pts: &[[f64; 2]]) -> Vec<Vec<f64>> {
    pts.iter()
        .map(|a| pts.iter().map(|b| (a[0] - b[0]).hypot(a[1] - b[1])).collect())
        .collect()
}
