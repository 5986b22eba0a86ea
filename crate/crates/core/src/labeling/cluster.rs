use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterLabel {
    Noise,
    Cluster(usize),
}

impl ClusterLabel {
    pub fn is_noise(self) -> bool {
        self == ClusterLabel::Noise
    }
}

impl std::fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClusterLabel::Noise => f.write_str("noise"),
            ClusterLabel::Cluster(c) => write!(f, "{c}"),
        }
    }
}

fn neighbors(m: &DistanceMatrix, i: usize, eps: f64) -> Vec<usize> {
    (0..m.len()).filter(|&j| m.get(i, j) <= eps).collect()
}

/// DBSCAN over a precomputed distance matrix. A point's neighborhood
/// includes itself; clusters are numbered in order of their first core
/// point.
pub fn dbscan(m: &DistanceMatrix, eps: f64, min_pts: usize) -> Vec<ClusterLabel> {
    assert!(eps > 0.0 && min_pts >= 1, "dbscan needs eps > 0 and min_pts >= 1");
    let n = m.len();
    let mut labels: Vec<Option<ClusterLabel>> = vec![None; n];
    let mut next = 0;
    for i in 0..n {
        if labels[i].is_some() {
            continue;
        }
        let nb = neighbors(m, i, eps);
        if nb.len() < min_pts {
            labels[i] = Some(ClusterLabel::Noise);
            continue;
        }
        let c = ClusterLabel::Cluster(next);
        next += 1;
        labels[i] = Some(c);
        let mut queue: VecDeque<usize> = nb.into_iter().filter(|&j| j != i).collect();
        while let Some(j) = queue.pop_front() {
            match labels[j] {
                Some(ClusterLabel::Noise) => labels[j] = Some(c),
                None => {
                    labels[j] = Some(c);
                    let nj = neighbors(m, j, eps);
                    if nj.len() >= min_pts {
                        queue.extend(nj.into_iter().filter(|&k| labels[k].is_none_or(ClusterLabel::is_noise)));
                    }
                }
                Some(ClusterLabel::Cluster(_)) => {}
            }
        }
    }
    labels.into_iter().map(|l| l.expect("every point is visited")).collect()
}

/// Sorted distances of every point to its `k`-th nearest other point.
pub fn k_distances(m: &DistanceMatrix, k: usize) -> Vec<f64> {
    let n = m.len();
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| m.get(i, j)).collect();
            row.sort_by(f64::total_cmp);
            row.get(k.max(1) - 1).copied().unwrap_or(0.0)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Knee of an ascending curve: after scaling both axes to [0, 1], the
/// sample lying farthest below the chord from first to last point. Falls
/// back to the last value for flat or too short curves.
pub fn knee(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let Some(&last) = sorted.last() else { return 0.0 };
    let first = sorted[0];
    let span = last - first;
    if n < 3 || span <= 0.0 {
        return last;
    }
    let mut best = (0.0, n - 1);
    for (i, &v) in sorted.iter().enumerate() {
        let x = i as f64 / (n - 1) as f64;
        let y = (v - first) / span;
        let gap = x - y;
        if gap > best.0 {
            best = (gap, i);
        }
    }
    sorted[best.1]
}

/// Default eps: the knee of the `(min_pts - 1)`-distance curve, located on
/// log distances so a far tier of outliers does not hide the first bend.
pub fn auto_eps(m: &DistanceMatrix, min_pts: usize) -> f64 {
    let kd = k_distances(m, min_pts.saturating_sub(1).max(1));
    let top = kd.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return f64::MIN_POSITIVE;
    }
    let floor = top * 1e-12;
    let logs: Vec<f64> = kd.iter().map(|v| v.max(floor).ln()).collect();
    let at = knee(&logs);
    let eps = logs.iter().position(|&l| l == at).map_or(top, |i| kd[i]);
    eps.max(f64::MIN_POSITIVE)
}

/// Tries every eps in `grid` and keeps the one whose NOISE set overlaps
/// `reference` the most; ties keep the earlier grid value.
pub fn grid_search_eps(m: &DistanceMatrix, min_pts: usize, grid: &[f64], reference: &[bool]) -> Option<(f64, usize)> {
    assert_eq!(reference.len(), m.len(), "reference must cover every scenario");
    let mut best: Option<(f64, usize)> = None;
    for &eps in grid.iter().filter(|e| **e > 0.0) {
        let hits = dbscan(m, eps, min_pts)
            .iter()
            .zip(reference)
            .filter(|(l, r)| l.is_noise() && **r)
            .count();
        if best.is_none_or(|(_, h)| hits > h) {
            best = Some((eps, hits));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DistanceMatrix {
        let rows: Vec<Vec<f64>> = xs.iter().map(|a| xs.iter().map(|b| (a - b).abs()).collect()).collect();
        DistanceMatrix::from_rows((0..xs.len() as u64).collect(), rows).unwrap()
    }

    #[test]
    fn tight_blob_is_one_cluster() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.01).collect();
        let labels = dbscan(&line(&xs), 1.0, 4);
        assert!(labels.iter().all(|&l| l == ClusterLabel::Cluster(0)));
    }

    #[test]
    fn far_points_are_noise() {
        let mut xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.01).collect();
        xs.extend([50.0, 100.0, 150.0]);
        let labels = dbscan(&line(&xs), 1.0, 4);
        assert_eq!(labels.iter().filter(|l| l.is_noise()).count(), 3);
        assert!(labels[20..].iter().all(|l| l.is_noise()));
    }

    #[test]
    fn border_points_join_the_cluster() {
        // 0..3 are core at eps 1; 4.0 is within reach of 3.0 only.
        let labels = dbscan(&line(&[0.0, 1.0, 2.0, 3.0, 4.0, 9.0]), 1.0, 3);
        assert_eq!(labels[4], ClusterLabel::Cluster(0));
        assert!(labels[5].is_noise());
    }

    #[test]
    fn knee_finds_the_jump() {
        let mut v: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.01).collect();
        v.extend([10.0, 20.0]);
        assert_eq!(knee(&v), 1.19);
        assert_eq!(knee(&[2.0, 2.0, 2.0]), 2.0);
    }

    #[test]
    fn grid_search_prefers_overlap() {
        let mut xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        xs.push(3.0);
        let mut reference = vec![false; 11];
        reference[10] = true;
        let (eps, hits) = grid_search_eps(&line(&xs), 3, &[5.0, 0.5], &reference).unwrap();
        assert_eq!((eps, hits), (0.5, 1));
    }
}
