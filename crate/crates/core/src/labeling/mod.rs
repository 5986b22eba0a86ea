//! Extreme-scenario labeling within one interaction type: pairwise
//! Graph-DTW distances, DBSCAN noise as the extreme set, a 2-D MDS view with
//! KDE density, and comparison against TTC and vector-DTW flags.

mod baseline;
mod cluster;
mod embed;
mod ttc;

pub use baseline::{
    compare_sets, frame_vector, pad_width, vector_dtw, vector_dtw_baseline, vector_sequence, FlagSet, VennCounts,
};
pub use cluster::{auto_eps, dbscan, grid_search_eps, k_distances, knee, ClusterLabel};
pub use embed::{kde_density, mds_embed, scott_bandwidth, Embedding};
pub use ttc::{min_ttc, ttc, ttc_label, TtcConfig, TtcResult};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph_dtw::{encode, scenario_distance, DtwConfig, DtwError, EncodedScenario};
use crate::ingest::{RoadMap, TrackSet};
use crate::slicing::AtomScenario;
use crate::tree_metric::MetricConfig;

#[derive(Debug, thiserror::Error)]
pub enum LabelError {
    #[error("need at least 2 scenarios, got {0}")]
    TooFewScenarios(usize),
    #[error("flag sets cover different scenarios")]
    UniverseMismatch,
    #[error("top two MDS eigenvalues are not positive")]
    DegenerateSpectrum,
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid label config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dtw(#[from] DtwError),
}

/// Symmetric matrix of scenario distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub ids: Vec<u64>,
    rows: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn from_rows(ids: Vec<u64>, rows: Vec<Vec<f64>>) -> Result<Self, LabelError> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(LabelError::InvalidMatrix(format!("expected {n}x{n}")));
        }
        for i in 0..n {
            if rows[i][i] != 0.0 {
                return Err(LabelError::InvalidMatrix(format!("diagonal entry {i} is not 0")));
            }
            for j in 0..n {
                let v = rows[i][j];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(LabelError::InvalidMatrix(format!("entry ({i}, {j}) = {v}")));
                }
                if (v - rows[j][i]).abs() > 1e-9 {
                    return Err(LabelError::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix { ids, rows })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Fills a distance matrix by calling `f` once per unordered pair, in
/// parallel, and mirroring the result.
pub fn pairwise_with<E>(
    ids: Vec<u64>,
    f: impl Fn(usize, usize) -> Result<f64, E> + Sync,
) -> Result<DistanceMatrix, LabelError>
where
    E: Send,
    LabelError: From<E>,
{
    let n = ids.len();
    if n < 2 {
        return Err(LabelError::TooFewScenarios(n));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| f(i, j))
        .collect::<Result<Vec<f64>, E>>()?;
    let mut rows = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        rows[i][j] = v;
        rows[j][i] = v;
    }
    DistanceMatrix::from_rows(ids, rows)
}

/// Graph-DTW distances between all pairs of encoded scenarios.
pub fn pairwise_distances(
    scenarios: &[EncodedScenario],
    dtw_cfg: &DtwConfig,
    metric: &MetricConfig,
) -> Result<DistanceMatrix, LabelError> {
    pairwise_with(scenarios.iter().map(|s| s.id).collect(), |i, j| {
        scenario_distance(&scenarios[i], &scenarios[j], dtw_cfg, metric)
    })
}

/// Vector-DTW baseline distances between all pairs.
pub fn pairwise_vector_distances(scenarios: &[EncodedScenario], dtw_cfg: &DtwConfig) -> Result<DistanceMatrix, LabelError> {
    pairwise_with(scenarios.iter().map(|s| s.id).collect(), |i, j| {
        vector_dtw_baseline(&scenarios[i], &scenarios[j], dtw_cfg)
    })
}

pub fn encode_all(
    atoms: &[AtomScenario],
    ts: &TrackSet,
    map: &RoadMap,
    metric: &MetricConfig,
    dtw_cfg: &DtwConfig,
) -> Result<Vec<EncodedScenario>, DtwError> {
    atoms.par_iter().map(|a| encode(a, ts, map, metric, dtw_cfg)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    /// DBSCAN radius over Graph-DTW distances; `None` picks the k-distance
    /// knee.
    pub eps: Option<f64>,
    /// Same for the vector-DTW baseline.
    pub vector_eps: Option<f64>,
    pub min_pts: usize,
    /// KDE bandwidth; `None` uses Scott's rule.
    pub bandwidth: Option<f64>,
    pub ttc: TtcConfig,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            eps: None,
            vector_eps: None,
            min_pts: 4,
            bandwidth: None,
            ttc: TtcConfig::default(),
        }
    }
}

impl LabelConfig {
    pub fn check(&self) -> Result<(), LabelError> {
        let bad = |v: Option<f64>| v.is_some_and(|x| !(x > 0.0));
        if self.min_pts == 0 || bad(self.eps) || bad(self.vector_eps) || bad(self.bandwidth) {
            return Err(LabelError::InvalidConfig("eps, bandwidth and min_pts must be positive".into()));
        }
        self.ttc.check().map_err(LabelError::InvalidConfig)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    pub graph_dtw_extreme: bool,
    pub ttc_extreme: bool,
    pub vector_dtw_extreme: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub id: u64,
    pub cluster: ClusterLabel,
    pub flags: MetricFlags,
    pub min_ttc: Option<f64>,
    pub x: f64,
    pub y: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub entries: Vec<LabelEntry>,
    pub venn: VennCounts,
    pub eps: f64,
    pub vector_eps: f64,
    pub min_pts: usize,
    pub bandwidth: f64,
    pub mds_eigenvalues: [f64; 2],
}

impl LabelReport {
    /// One CSV row per scenario: id, x, y, density, cluster and the flags.
    pub fn coordinates_csv(&self) -> String {
        let mut out = String::from("id,x,y,density,cluster,graph_dtw_extreme,ttc_extreme,vector_dtw_extreme\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                e.id,
                crate::ingest::fmt_float(e.x),
                crate::ingest::fmt_float(e.y),
                crate::ingest::fmt_float(e.density),
                e.cluster,
                e.flags.graph_dtw_extreme,
                e.flags.ttc_extreme,
                e.flags.vector_dtw_extreme
            ));
        }
        out
    }
}

/// Everything the labeling stage derives from the encoded scenarios and
/// their precomputed distance matrices.
pub fn label_from_matrices(
    graph: &DistanceMatrix,
    vector: &DistanceMatrix,
    ttc: &[TtcResult],
    cfg: &LabelConfig,
) -> Result<LabelReport, LabelError> {
    cfg.check()?;
    let ids = graph.ids.clone();
    if vector.ids != ids || ttc.iter().map(|t| t.id).ne(ids.iter().copied()) {
        return Err(LabelError::UniverseMismatch);
    }
    let eps = cfg.eps.unwrap_or_else(|| auto_eps(graph, cfg.min_pts));
    let vector_eps = cfg.vector_eps.unwrap_or_else(|| auto_eps(vector, cfg.min_pts));
    let clusters = dbscan(graph, eps, cfg.min_pts);
    let vector_noise: Vec<bool> = dbscan(vector, vector_eps, cfg.min_pts).iter().map(|l| l.is_noise()).collect();
    let set = |flags: Vec<bool>| FlagSet { ids: ids.clone(), flags };
    let venn = compare_sets(
        &set(clusters.iter().map(|l| l.is_noise()).collect()),
        &set(ttc.iter().map(|t| t.extreme).collect()),
        &set(vector_noise.clone()),
    )?;
    let emb = mds_embed(graph)?;
    let bandwidth = cfg.bandwidth.unwrap_or_else(|| scott_bandwidth(&emb.coords));
    let density = kde_density(&emb.coords, bandwidth);
    let entries = (0..ids.len())
        .map(|i| LabelEntry {
            id: ids[i],
            cluster: clusters[i],
            flags: MetricFlags {
                graph_dtw_extreme: clusters[i].is_noise(),
                ttc_extreme: ttc[i].extreme,
                vector_dtw_extreme: vector_noise[i],
            },
            min_ttc: ttc[i].min_ttc,
            x: emb.coords[i][0],
            y: emb.coords[i][1],
            density: density[i],
        })
        .collect();
    Ok(LabelReport {
        entries,
        venn,
        eps,
        vector_eps,
        min_pts: cfg.min_pts,
        bandwidth,
        mds_eigenvalues: emb.eigenvalues,
    })
}

/// Full labeling of one interaction class.
pub fn label_scenarios(
    atoms: &[AtomScenario],
    ts: &TrackSet,
    map: &RoadMap,
    metric: &MetricConfig,
    dtw_cfg: &DtwConfig,
    cfg: &LabelConfig,
) -> Result<LabelReport, LabelError> {
    cfg.check()?;
    if atoms.len() < 2 {
        return Err(LabelError::TooFewScenarios(atoms.len()));
    }
    let encoded = encode_all(atoms, ts, map, metric, dtw_cfg)?;
    let graph = pairwise_distances(&encoded, dtw_cfg, metric)?;
    let vector = pairwise_vector_distances(&encoded, dtw_cfg)?;
    let ttc = ttc_label(atoms, ts, map, &cfg.ttc);
    label_from_matrices(&graph, &vector, &ttc, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn pair_count() {
        let calls = AtomicUsize::new(0);
        let m = pairwise_with((0..7).collect(), |i, j| {
            calls.fetch_add(1, Ordering::Relaxed);
            Ok::<_, LabelError>((i as f64 - j as f64).abs())
        })
        .unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 21);
        assert_eq!(m.get(6, 2), 4.0);
        assert_eq!(m.get(2, 6), 4.0);
    }

    #[test]
    fn one_identical_pair() {
        let pts = [0.0f64, 0.0, 3.0];
        let m = pairwise_with((0..3).collect(), |i, j| Ok::<_, LabelError>((pts[i] - pts[j]).abs())).unwrap();
        let zeros = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).filter(|&(i, j)| m.get(i, j) == 0.0).count();
        assert_eq!(zeros, 1);
    }

    #[test]
    fn matrix_validation() {
        assert!(pairwise_with(vec![1], |_, _| Ok::<_, LabelError>(0.0)).is_err());
        assert!(DistanceMatrix::from_rows(vec![0, 1], vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(vec![0, 1], vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(vec![0, 1], vec![vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn config_checks() {
        assert!(LabelConfig::default().check().is_ok());
        let bad = LabelConfig {
            eps: Some(0.0),
            ..Default::default()
        };
        assert!(bad.check().is_err());
    }
}
