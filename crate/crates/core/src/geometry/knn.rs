use std::cmp::Ordering;

use rayon::prelude::*;

use super::Vec3;
use crate::error::{Error, Result};

/// Row-major `rows × k` neighbor table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborIndex {
    pub indices: Vec<usize>,
    pub k: usize,
}

impl NeighborIndex {
    pub fn new(indices: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 || !indices.len().is_multiple_of(k) {
            return Err(Error::param("neighbor table length is not a multiple of k"));
        }
        Ok(NeighborIndex { indices, k })
    }

    pub fn rows(&self) -> usize {
        self.indices.len() / self.k
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    /// Table where every row lists its own index `k` times.
    pub fn self_loops(rows: usize, k: usize) -> Self {
        NeighborIndex {
            indices: (0..rows).flat_map(|i| std::iter::repeat_n(i, k)).collect(),
            k,
        }
    }
}

#[inline]
fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

/// Exact k nearest neighbors by Euclidean distance, ties broken by the
/// smaller reference index.
///
/// `queries` and `reference` are row-major with `dim` columns. When
/// `exclude` is given, `exclude[i]` never appears in row `i`.
pub fn knn(queries: &[f64], reference: &[f64], dim: usize, k: usize, exclude: Option<&[usize]>) -> Result<NeighborIndex> {
    if dim == 0 || !queries.len().is_multiple_of(dim) || !reference.len().is_multiple_of(dim) {
        return Err(Error::param("coordinate buffers do not match the dimension"));
    }
    let m = queries.len() / dim;
    let n = reference.len() / dim;
    let available = if exclude.is_some() { n.saturating_sub(1) } else { n };
    if k == 0 || k > available {
        return Err(Error::param(format!(
            "k = {k} out of range for {n} reference points{}",
            if exclude.is_some() { " with exclusion" } else { "" }
        )));
    }
    if let Some(ex) = exclude {
        if ex.len() != m {
            return Err(Error::param("exclusion list must have one entry per query"));
        }
    }

    let mut indices = vec![0usize; m * k];
    indices.par_chunks_mut(k).enumerate().for_each_init(
        || Vec::with_capacity(n),
        |scratch, (i, out)| {
            let q = &queries[i * dim..(i + 1) * dim];
            let skip = exclude.map(|e| e[i]);
            scratch.clear();
            for (j, r) in reference.chunks_exact(dim).enumerate() {
                if Some(j) == skip {
                    continue;
                }
                let mut d = 0.0;
                for c in 0..dim {
                    let t = q[c] - r[c];
                    d += t * t;
                }
                scratch.push((d, j));
            }
            if k < scratch.len() {
                scratch.select_nth_unstable_by(k - 1, by_distance_then_index);
            }
            let head = &mut scratch[..k];
            head.sort_unstable_by(by_distance_then_index);
            for (o, &(_, j)) in out.iter_mut().zip(head.iter()) {
                *o = j;
            }
        },
    );
    Ok(NeighborIndex { indices, k })
}

/// [`knn`] over 3D points.
pub fn knn_points(queries: &[Vec3], reference: &[Vec3], k: usize, exclude: Option<&[usize]>) -> Result<NeighborIndex> {
    let q: Vec<f64> = queries.iter().flatten().copied().collect();
    let r: Vec<f64> = reference.iter().flatten().copied().collect();
    knn(&q, &r, 3, k, exclude)
}
