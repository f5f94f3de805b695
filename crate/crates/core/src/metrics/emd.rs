use crate::error::{Error, Result};
use crate::geometry::{dist_sq, PointCloud, Vec3};

/// Default upper bound on cloud size for the O(N³) solver.
pub const DEFAULT_EMD_CAP: usize = 2048;

/// Optimal bijection: `x[i]` is matched to `y[mapping[i]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub mapping: Vec<usize>,
    /// Mean squared matched distance.
    pub cost: f64,
}

/// Minimum-cost perfect matching on a dense `n×n` cost matrix (row-major),
/// via shortest augmenting paths with row/column potentials. Returns the
/// column assigned to each row.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials with a virtual column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_to = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        min_to.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let crow = &cost[(i0 - 1) * n..i0 * n];
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = crow[j - 1] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut mapping = vec![0usize; n];
    for j in 1..=n {
        mapping[col_owner[j] - 1] = j - 1;
    }
    mapping
}

pub fn emd_points(x: &[Vec3], y: &[Vec3], cap: usize) -> Result<Assignment> {
    if x.len() != y.len() {
        return Err(Error::param(format!("EMD needs equal sizes, got {} and {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::param("EMD of empty clouds"));
    }
    if x.len() > cap {
        return Err(Error::Capacity(format!("EMD size {} exceeds cap {cap}", x.len())));
    }
    let n = x.len();
    let mut cost = vec![0.0; n * n];
    for (i, &p) in x.iter().enumerate() {
        for (j, &q) in y.iter().enumerate() {
            cost[i * n + j] = dist_sq(p, q);
        }
    }
    let mapping = hungarian(&cost, n);
    let total: f64 = mapping.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok(Assignment {
        mapping,
        cost: total / n as f64,
    })
}

/// Exact EMD with the default size cap.
pub fn emd(x: &PointCloud, y: &PointCloud) -> Result<Assignment> {
    emd_points(&x.points, &y.points, DEFAULT_EMD_CAP)
}
