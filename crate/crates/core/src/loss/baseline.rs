use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::metrics::{emd_points, DEFAULT_EMD_CAP};
use crate::network::{decode, encode, psa, Bound, DenoiseTrajectory, Model};
use crate::rng::{stream, stream_rng};

/// Noise-regression objective: perturb by `u ~ N(0, Δσ²)` and regress the
/// first block's displacement onto `−u` with MSE.
pub fn baseline_noise_loss(tape: &mut Tape, p: &Bound, model: &Model, cloud: &[Vec3], delta_sigma: f64, seed: u64) -> Result<Var> {
    if !(delta_sigma >= 0.0) {
        return Err(Error::param("noise level must be non-negative"));
    }
    let mut rng = stream_rng(seed, stream::BASELINE);
    let n = cloud.len();
    let u: Vec<f64> = (0..3 * n)
        .map(|_| delta_sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    let perturbed: Vec<f64> = cloud.iter().flatten().zip(&u).map(|(x, e)| x + e).collect();
    let x = tape.constant(vec![n, 3], perturbed)?;
    let target = tape.constant(vec![n, 3], u.iter().map(|e| -e).collect())?;
    let k = model.hyper.k;
    let feats = encode(tape, p, &model.encoder, x, k)?;
    let block = &model.blocks[0];
    let f = psa(tape, p, &block.psa, feats, x, k, None)?;
    let d = decode(tape, p, &block.decoder, f, model.hyper.max_step)?;
    tape.mse(d, target)
}

/// Exact transport cost between two `N×3` tape values; the optimal
/// assignment is fixed from the forward values.
pub fn emd_term(tape: &mut Tape, x: Var, y: Var) -> Result<Var> {
    let xs: Vec<Vec3> = tape.value(x).chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let ys: Vec<Vec3> = tape.value(y).chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let assignment = emd_points(&xs, &ys, DEFAULT_EMD_CAP)?;
    let n = xs.len();
    let matched = tape.gather_rows(y, &assignment.mapping, 1)?;
    let matched = tape.reshape(matched, &[n, 3])?;
    let diff = tape.sub(x, matched)?;
    let sq = tape.mul(diff, diff)?;
    let s = tape.sum_all(sq);
    Ok(tape.scale(s, 1.0 / n as f64))
}

/// `EMD(X_a + D(X_a), X_b) + EMD(X_b + D(X_b), X_a) + EMD(X_a + D(X_a), X_b + D(X_b))`
/// over the final outputs of two trajectories.
pub fn baseline_emd_loss(tape: &mut Tape, a: &DenoiseTrajectory, b: &DenoiseTrajectory) -> Result<Var> {
    let (xa, xb) = (a.clouds[0], b.clouds[0]);
    if tape.shape(xa) != tape.shape(xb) {
        return Err(Error::param("EMD objective needs equally sized variants"));
    }
    let (da, db) = (a.output(), b.output());
    let t1 = emd_term(tape, da, xb)?;
    let t2 = emd_term(tape, db, xa)?;
    let t3 = emd_term(tape, da, db)?;
    let s = tape.add(t1, t2)?;
    tape.add(s, t3)
}
