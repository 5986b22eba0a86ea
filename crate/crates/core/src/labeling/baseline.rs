use serde::{Deserialize, Serialize};

use super::LabelError;
use crate::graph_dtw::{dtw, DtwConfig, DtwError, EncodedFrame, EncodedScenario, FrameDistanceMatrix};

/// Features of the ego's direct V2V neighbors, concatenated in ascending id
/// order.
pub fn frame_vector(f: &EncodedFrame) -> Vec<f64> {
    let t = &f.trees.v2v;
    t.root()
        .children
        .iter()
        .flat_map(|&c| t.nodes[c].feature)
        .collect()
}

/// Vector sequence of a scenario.
pub fn vector_sequence(s: &EncodedScenario) -> Vec<Vec<f64>> {
    s.frames.iter().map(frame_vector).collect()
}

fn padded_dist(a: &[f64], b: &[f64], width: usize) -> f64 {
    (0..width)
        .map(|k| {
            let x = a.get(k).copied().unwrap_or(0.0);
            let y = b.get(k).copied().unwrap_or(0.0);
            (x - y) * (x - y)
        })
        .sum::<f64>()
        .sqrt()
}

/// Common width both sequences are zero-padded to.
pub fn pad_width(a: &[Vec<f64>], b: &[Vec<f64>]) -> usize {
    a.iter().chain(b).map(Vec::len).max().unwrap_or(0)
}

/// Plain DTW over flat feature vectors, zero-padded to a common width,
/// with the same band and normalization as Graph-DTW.
pub fn vector_dtw(a: &[Vec<f64>], b: &[Vec<f64>], window: Option<usize>) -> Result<f64, DtwError> {
    if a.is_empty() || b.is_empty() {
        return Err(DtwError::EmptyScenario);
    }
    let width = pad_width(a, b);
    let mat = FrameDistanceMatrix::from_fn(a.len(), b.len(), window, |x, y| padded_dist(&a[x], &b[y], width));
    Ok(dtw(&mat, window)?.normalized)
}

pub fn vector_dtw_baseline(a: &EncodedScenario, b: &EncodedScenario, cfg: &DtwConfig) -> Result<f64, DtwError> {
    vector_dtw(&vector_sequence(a), &vector_sequence(b), cfg.window)
}

/// Boolean flags over one scenario universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagSet {
    pub ids: Vec<u64>,
    pub flags: Vec<bool>,
}

/// Region counts of the three-way Venn diagram of Graph-DTW (`g`), TTC
/// (`t`) and vector-DTW (`v`) flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VennCounts {
    pub g_only: usize,
    pub t_only: usize,
    pub v_only: usize,
    pub g_t: usize,
    pub g_v: usize,
    pub t_v: usize,
    pub g_t_v: usize,
    pub union: usize,
    /// Share of the union flagged by Graph-DTW alone; 0 for an empty union.
    pub g_only_share: f64,
}

pub fn compare_sets(g: &FlagSet, t: &FlagSet, v: &FlagSet) -> Result<VennCounts, LabelError> {
    for s in [g, t, v] {
        if s.ids.len() != s.flags.len() {
            return Err(LabelError::UniverseMismatch);
        }
    }
    if g.ids != t.ids || g.ids != v.ids {
        return Err(LabelError::UniverseMismatch);
    }
    // Bit 0: Graph-DTW, bit 1: TTC, bit 2: vector DTW.
    let mut n = [0usize; 8];
    for i in 0..g.ids.len() {
        n[g.flags[i] as usize | (t.flags[i] as usize) << 1 | (v.flags[i] as usize) << 2] += 1;
    }
    let mut c = VennCounts {
        g_only: n[1],
        t_only: n[2],
        g_t: n[3],
        v_only: n[4],
        g_v: n[5],
        t_v: n[6],
        g_t_v: n[7],
        union: n[1..].iter().sum(),
        g_only_share: 0.0,
    };
    c.g_only_share = if c.union == 0 { 0.0 } else { c.g_only as f64 / c.union as f64 };
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(flags: &[bool]) -> FlagSet {
        FlagSet {
            ids: (0..flags.len() as u64).collect(),
            flags: flags.to_vec(),
        }
    }

    #[test]
    fn identical_flags_fill_the_centre() {
        let s = fs(&[true, false, true]);
        let c = compare_sets(&s, &s, &s).unwrap();
        assert_eq!((c.g_t_v, c.union, c.g_only + c.t_only + c.v_only + c.g_t + c.g_v + c.t_v), (2, 2, 0));
    }

    #[test]
    fn disjoint_singletons() {
        let c = compare_sets(&fs(&[true, false, false]), &fs(&[false, true, false]), &fs(&[false, false, true])).unwrap();
        assert_eq!((c.g_only, c.t_only, c.v_only, c.union), (1, 1, 1, 3));
        assert!((c.g_only_share - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn universe_must_match() {
        let mut other = fs(&[true, false]);
        other.ids[1] = 7;
        assert!(matches!(compare_sets(&fs(&[true, false]), &other, &fs(&[true, false])), Err(LabelError::UniverseMismatch)));
    }

    #[test]
    fn padding_width() {
        let a = vec![vec![1.0, 2.0, 3.0]];
        let b = vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]];
        assert_eq!(pad_width(&a, &b), 6);
        let d = vector_dtw(&a, &b, None).unwrap();
        assert!((d - (16.0f64 + 25.0 + 36.0).sqrt()).abs() < 1e-12);
        assert_eq!(vector_dtw(&b, &b, Some(25)).unwrap(), 0.0);
    }
}
