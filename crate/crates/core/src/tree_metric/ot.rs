use serde::{Deserialize, Serialize};

use super::MetricError;

/// Optimal assignment between two equally sized node sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub n: usize,
    /// `assignment[i]` is the column matched to row `i`.
    pub assignment: Vec<usize>,
    /// `<C, gamma> / n`.
    pub cost: f64,
}

impl TransportPlan {
    /// Dense 0/1 flow matrix, row major.
    pub fn flow(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| if self.assignment[i] == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }
}

/// Square cost matrix stored row major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = rows.len();
        if n == 0 {
            return Err(MetricError::NonSquare { rows: 0, cols: 0 });
        }
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(MetricError::NonSquare { rows: n, cols: r.len() });
            }
            data.extend_from_slice(r);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        Ok(CostMatrix { n, data })
    }

    pub(crate) fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CostMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn total(&self, assignment: &[usize]) -> f64 {
        assignment.iter().enumerate().map(|(i, &j)| self.at(i, j)).sum()
    }
}

/// Minimum-cost perfect matching on the rows/cols selected by `rows` and
/// `cols` (equal length). Shortest augmenting path with potentials, O(k^3).
fn hungarian(c: &CostMatrix, rows: &[usize], cols: &[usize]) -> Vec<usize> {
    let k = rows.len();
    let cost = |i: usize, j: usize| c.at(rows[i - 1], cols[j - 1]);
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    let mut minv = vec![0.0; k + 1];
    let mut used = vec![false; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; k];
    for j in 1..=k {
        out[p[j] - 1] = cols[j - 1];
    }
    out
}

/// Minimum of `<C, P> / n` over permutation matrices P, value only.
pub(crate) fn ot_cost(c: &CostMatrix) -> f64 {
    let n = c.n;
    match n {
        1 => c.at(0, 0),
        2 => (c.at(0, 0) + c.at(1, 1)).min(c.at(0, 1) + c.at(1, 0)) / 2.0,
        _ => {
            let all: Vec<usize> = (0..n).collect();
            c.total(&hungarian(c, &all, &all)) / n as f64
        }
    }
}

/// Exact solution of the balanced transport problem with unit marginals.
/// Among optimal assignments the lexicographically smallest one is
/// returned.
pub fn ot_assignment(c: &CostMatrix) -> TransportPlan {
    let n = c.n;
    let all: Vec<usize> = (0..n).collect();
    let best = c.total(&hungarian(c, &all, &all));
    let tol = 1e-9 * best.abs().max(1.0);

    let mut assignment = Vec::with_capacity(n);
    let mut free: Vec<usize> = all.clone();
    let mut fixed = 0.0;
    for i in 0..n {
        let rest_rows: Vec<usize> = (i + 1..n).collect();
        let mut chosen = None;
        for (pos, &j) in free.iter().enumerate() {
            let cols: Vec<usize> = free.iter().copied().filter(|&x| x != j).collect();
            let tail = if rest_rows.is_empty() {
                0.0
            } else {
                let m = hungarian(c, &rest_rows, &cols);
                rest_rows.iter().zip(&m).map(|(&r, &col)| c.at(r, col)).sum()
            };
            if fixed + c.at(i, j) + tail <= best + tol {
                chosen = Some(pos);
                break;
            }
        }
        let pos = chosen.expect("an optimal completion exists");
        let j = free.remove(pos);
        fixed += c.at(i, j);
        assignment.push(j);
    }
    TransportPlan {
        n,
        cost: c.total(&assignment) / n as f64,
        assignment,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> CostMatrix {
        CostMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn zero_diagonal_gives_identity() {
        let plan = ot_assignment(&m(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert_eq!(plan.assignment, [0, 1]);
        assert_eq!(plan.cost, 0.0);
        assert_eq!(plan.flow(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn single_entry_is_forced() {
        let plan = ot_assignment(&m(&[&[3.5]]));
        assert_eq!(plan.cost, 3.5);
        assert_eq!(plan.assignment, [0]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let plan = ot_assignment(&m(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]]));
        assert_eq!(plan.assignment, [0, 1, 2]);
        let plan = ot_assignment(&m(&[&[5.0, 1.0, 1.0], &[1.0, 5.0, 1.0], &[1.0, 1.0, 5.0]]));
        assert_eq!(plan.assignment, [1, 2, 0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            CostMatrix::from_rows(&[vec![1.0, 2.0]]),
            Err(MetricError::NonSquare { rows: 1, cols: 2 })
        ));
        assert!(matches!(CostMatrix::from_rows(&[vec![f64::NAN]]), Err(MetricError::NonFinite)));
        assert!(CostMatrix::from_rows(&[]).is_err());
    }

    #[test]
    fn cost_only_path_agrees() {
        let c = m(&[&[4.0, 1.0, 3.0], &[2.0, 0.0, 5.0], &[3.0, 2.0, 2.0]]);
        assert_eq!(ot_cost(&c), ot_assignment(&c).cost);
        assert_eq!(ot_assignment(&c).cost, 5.0 / 3.0);
    }
}
