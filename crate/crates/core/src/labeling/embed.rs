use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{DistanceMatrix, LabelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub coords: Vec<[f64; 2]>,
    /// Top two eigenvalues of the double-centered Gram matrix, before
    /// clamping.
    pub eigenvalues: [f64; 2],
    pub degenerate: bool,
}

/// Classical (Torgerson) MDS into the plane. Each axis is flipped so its
/// first non-negligible coordinate is positive. A spectrum with no
/// positive top eigenvalue yields all-zero coordinates and a warning.
pub fn mds_embed(m: &DistanceMatrix) -> Result<Embedding, LabelError> {
    let n = m.len();
    if n < 2 {
        return Err(LabelError::TooFewScenarios(n));
    }
    let d2 = DMatrix::from_fn(n, n, |i, j| m.get(i, j).powi(2));
    let row_mean: Vec<f64> = (0..n).map(|i| d2.row(i).mean()).collect();
    let all_mean = d2.mean();
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_mean[i] - row_mean[j] + all_mean));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));
    let top = [order[0], order[1]];
    let eigenvalues = [eig.eigenvalues[top[0]], eig.eigenvalues[top[1]]];
    let degenerate = eigenvalues.iter().all(|&l| l <= 0.0);
    if degenerate {
        log::warn!("{}", LabelError::DegenerateSpectrum);
        return Ok(Embedding {
            coords: vec![[0.0; 2]; n],
            eigenvalues,
            degenerate,
        });
    }
    let mut coords = vec![[0.0; 2]; n];
    let scale = eigenvalues.map(|l| l.max(0.0).sqrt());
    let tiny = 1e-12 * scale[0].max(1.0);
    for axis in 0..2 {
        let col = eig.eigenvectors.column(top[axis]);
        let flip = col
            .iter()
            .map(|v| v * scale[axis])
            .find(|v| v.abs() > tiny)
            .is_some_and(|v| v < 0.0);
        for (i, c) in coords.iter_mut().enumerate() {
            let v = col[i] * scale[axis];
            c[axis] = if flip { -v } else { v };
        }
    }
    Ok(Embedding {
        coords,
        eigenvalues,
        degenerate,
    })
}

/// Scott's rule for a 2-D sample: `sigma * n^(-1/6)` with `sigma` the mean
/// per-axis standard deviation. Zero spread falls back to 1.
pub fn scott_bandwidth(coords: &[[f64; 2]]) -> f64 {
    let n = coords.len() as f64;
    if coords.len() < 2 {
        return 1.0;
    }
    let sd = |k: usize| {
        let mean = coords.iter().map(|c| c[k]).sum::<f64>() / n;
        (coords.iter().map(|c| (c[k] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let sigma = (sd(0) + sd(1)) / 2.0;
    if sigma > 0.0 {
        sigma * n.powf(-1.0 / 6.0)
    } else {
        1.0
    }
}

/// Isotropic Gaussian KDE evaluated at every sample.
pub fn kde_density(coords: &[[f64; 2]], bandwidth: f64) -> Vec<f64> {
    assert!(bandwidth > 0.0, "bandwidth must be positive");
    let n = coords.len() as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * bandwidth * bandwidth);
    coords
        .iter()
        .map(|p| {
            coords
                .iter()
                .map(|q| {
                    let r2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                    (-r2 / (2.0 * bandwidth * bandwidth)).exp()
                })
                .sum::<f64>()
                * norm
                / n
        })
        .collect()
}
