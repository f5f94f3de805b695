use rand::Rng as _;

use super::{knn_points, PointCloud};
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

fn gather(cloud: &PointCloud, rows: &[usize]) -> PointCloud {
    let mut out = cloud.clone();
    out.points = rows.iter().map(|&i| cloud.points[i]).collect();
    out
}

/// The `patch_size` nearest neighbors of a uniformly chosen seed point,
/// ordered by distance to it (the seed point comes first).
pub fn sample_patch(cloud: &PointCloud, patch_size: usize, seed: u64) -> Result<PointCloud> {
    if patch_size == 0 || patch_size > cloud.len() {
        return Err(Error::param(format!(
            "patch size {patch_size} out of range for {} points",
            cloud.len()
        )));
    }
    let centre = stream_rng(seed, stream::PATCH).gen_range(0..cloud.len());
    let idx = knn_points(&cloud.points[centre..=centre], &cloud.points, patch_size, None)?;
    Ok(gather(cloud, idx.row(0)))
}

/// Spatially matching patches from two variants of one shape: the centre is
/// drawn from `a` and both patches are its nearest neighbors in each cloud.
pub fn sample_paired_patches(a: &PointCloud, b: &PointCloud, patch_size: usize, seed: u64) -> Result<(PointCloud, PointCloud)> {
    if patch_size == 0 || patch_size > a.len().min(b.len()) {
        return Err(Error::param(format!("patch size {patch_size} out of range")));
    }
    let centre = stream_rng(seed, stream::PATCH).gen_range(0..a.len());
    let q = &a.points[centre..=centre];
    let ia = knn_points(q, &a.points, patch_size, None)?;
    let ib = knn_points(q, &b.points, patch_size, None)?;
    Ok((gather(a, ia.row(0)), gather(b, ib.row(0))))
}
