use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::metrics::differentiable_chamfer;
use crate::network::{DenoiseTrajectory, MirrorRecord};

/// Per-point view of one [`MirrorRecord`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirrorTriple {
    pub seed: Vec3,
    pub denoised_seed: Vec3,
    pub mirror_input: Vec3,
    pub denoised_mirror: Vec3,
    pub displacement: Vec3,
    pub mirror_displacement: Vec3,
}

fn row(v: &[f64], i: usize) -> Vec3 {
    [v[3 * i], v[3 * i + 1], v[3 * i + 2]]
}

/// Reads the per-point mirror quantities of one block off the tape.
pub fn mirror_triples(tape: &Tape, rec: &MirrorRecord) -> Vec<MirrorTriple> {
    let n = tape.shape(rec.seed)[0];
    let get = |v: Var| tape.value(v);
    (0..n)
        .map(|i| MirrorTriple {
            seed: row(get(rec.seed), i),
            denoised_seed: row(get(rec.denoised_seed), i),
            mirror_input: row(get(rec.mirror_input), i),
            denoised_mirror: row(get(rec.denoised_mirror), i),
            displacement: row(get(rec.displacement), i),
            mirror_displacement: row(get(rec.mirror_displacement), i),
        })
        .collect()
}

/// `Σ_i ‖x̂_i − x̄_i‖²`, differentiated through both branches.
pub fn mpc_loss(tape: &mut Tape, rec: &MirrorRecord) -> Result<Var> {
    let diff = tape.sub(rec.denoised_seed, rec.denoised_mirror)?;
    let sq = tape.mul(diff, diff)?;
    Ok(tape.sum_all(sq))
}

/// `CD(X_a^l, X_b^l) + CD(X_a^{l−1}, X_b^l) + CD(X_b^{l−1}, X_a^l)`, for
/// `1 ≤ l ≤ L`.
pub fn sr_loss(tape: &mut Tape, a: &DenoiseTrajectory, b: &DenoiseTrajectory, l: usize) -> Result<Var> {
    if l == 0 || l >= a.clouds.len() || l >= b.clouds.len() {
        return Err(Error::param(format!("block index {l} out of range")));
    }
    let t1 = differentiable_chamfer(tape, a.clouds[l], b.clouds[l])?;
    let t2 = differentiable_chamfer(tape, a.clouds[l - 1], b.clouds[l])?;
    let t3 = differentiable_chamfer(tape, b.clouds[l - 1], a.clouds[l])?;
    let s = tape.add(t1, t2)?;
    tape.add(s, t3)
}

/// Loss terms per block, plus the weighted total as a tape value.
#[derive(Clone, Debug)]
pub struct LossBreakdown {
    pub total: Var,
    pub total_value: f64,
    /// Mirror consistency per block, variants a and b summed.
    pub mpc: Vec<f64>,
    pub sr: Vec<f64>,
    /// Named extra terms (baseline objectives).
    pub extra: Vec<(String, f64)>,
}

/// `Σ_l (λ·(MPC_a^l + MPC_b^l) + SR^l)`.
///
/// When `use_mpc` is false only the similarity term is used.
pub fn total_loss(tape: &mut Tape, a: &DenoiseTrajectory, b: &DenoiseTrajectory, use_mpc: bool, lambda_mpc: f64) -> Result<LossBreakdown> {
    let blocks = a.blocks();
    if b.blocks() != blocks || blocks == 0 {
        return Err(Error::param("trajectories must have the same non-zero block count"));
    }
    if use_mpc && (a.mirror.len() != blocks || b.mirror.len() != blocks) {
        return Err(Error::State(
            "mirror records missing; run the forward pass with mirror enabled".into(),
        ));
    }
    let mut total: Option<Var> = None;
    let mut mpc = Vec::new();
    let mut sr = Vec::new();
    for l in 1..=blocks {
        let s = sr_loss(tape, a, b, l)?;
        sr.push(tape.value(s)[0]);
        let mut term = s;
        if use_mpc {
            let ma = mpc_loss(tape, &a.mirror[l - 1])?;
            let mb = mpc_loss(tape, &b.mirror[l - 1])?;
            let m = tape.add(ma, mb)?;
            mpc.push(tape.value(m)[0]);
            let weighted = tape.scale(m, lambda_mpc);
            term = tape.add(weighted, s)?;
        }
        total = Some(match total {
            None => term,
            Some(t) => tape.add(t, term)?,
        });
    }
    let total = total.unwrap();
    Ok(LossBreakdown {
        total,
        total_value: tape.value(total)[0],
        mpc,
        sr,
        extra: Vec::new(),
    })
}
