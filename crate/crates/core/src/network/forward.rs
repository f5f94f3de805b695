use serde::{Deserialize, Serialize};

use super::layers::Bound;
use super::model::{DecoderParams, EncoderParams, Model, PsaParams};
use crate::autodiff::{Reduction, Tape, Var};
use crate::error::{Error, Result};
use crate::geometry::{knn, NeighborIndex, PointCloud};

/// Which cloud the mirror point searches for its neighbors in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorNeighborhood {
    /// The block output `X^l` (the denoised cloud).
    #[default]
    Denoised,
    /// The block input `X^{l-1}`.
    Input,
}

/// Mirror-point generation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorConfig {
    pub w1: f64,
    pub w2: f64,
    pub neighborhood: MirrorNeighborhood,
}

impl Default for MirrorConfig {
    fn default() -> Self {
        MirrorConfig {
            w1: 1.0,
            w2: 2.0,
            neighborhood: MirrorNeighborhood::Denoised,
        }
    }
}

/// Per-block mirror quantities, all `N×3` tape values.
#[derive(Clone, Copy, Debug)]
pub struct MirrorRecord {
    pub seed: Var,
    pub denoised_seed: Var,
    pub mirror_input: Var,
    pub denoised_mirror: Var,
    pub displacement: Var,
    pub mirror_displacement: Var,
}

/// Record of one forward pass.
#[derive(Clone, Debug)]
pub struct DenoiseTrajectory {
    /// `X⁰ … X^L`.
    pub clouds: Vec<Var>,
    /// `d¹ … d^L`.
    pub displacements: Vec<Var>,
    /// `U⁰ … U^L`.
    pub features: Vec<Var>,
    pub mirror: Vec<MirrorRecord>,
}

impl DenoiseTrajectory {
    pub fn blocks(&self) -> usize {
        self.displacements.len()
    }

    pub fn output(&self) -> Var {
        *self.clouds.last().unwrap()
    }
}

fn rows(tape: &Tape, v: Var) -> usize {
    tape.shape(v)[0]
}

fn width(tape: &Tape, v: Var) -> usize {
    *tape.shape(v).last().unwrap()
}

fn knn_on(tape: &Tape, queries: Var, reference: Var, k: usize, exclude: Option<&[usize]>) -> Result<NeighborIndex> {
    let d = width(tape, reference);
    knn(tape.value(queries), tape.value(reference), d, k, exclude)
}

/// Dynamic-graph encoder. Neighborhoods are recomputed in the current
/// feature space at every layer and carry no gradient.
pub fn encode(tape: &mut Tape, p: &Bound, enc: &EncoderParams, cloud: Var, k: usize) -> Result<Var> {
    let n = rows(tape, cloud);
    if n <= k {
        return Err(Error::param(format!("encoder needs more than k = {k} points, got {n}")));
    }
    let self_idx = NeighborIndex::self_loops(n, k);
    let mut g = cloud;
    for layer in &enc.layers {
        let nbr = knn_on(tape, g, g, k, None)?;
        let self_term = layer.self_mlp.forward(tape, p, g)?;
        // [g_i ∥ g_j − g_i]·W = g_i·W_c + (g_j − g_i)·W_d
        let centre = tape.affine(g, p.var(layer.edge_w_centre), Some(p.var(layer.edge_b)))?;
        let diff = tape.affine(g, p.var(layer.edge_w_diff), None)?;
        let centre_i = tape.gather_rows(centre, &self_idx.indices, k)?;
        let diff_j = tape.gather_rows(diff, &nbr.indices, k)?;
        let diff_i = tape.gather_rows(diff, &self_idx.indices, k)?;
        let rel = tape.sub(diff_j, diff_i)?;
        let pre = tape.add(centre_i, rel)?;
        let hidden = tape.relu(pre);
        let (ow, ob) = layer.edge_out;
        let edge = tape.affine(hidden, p.var(ow), Some(p.var(ob)))?;
        let agg = tape.reduce(edge, Reduction::Sum, 1)?;
        g = tape.add(self_term, agg)?;
    }
    Ok(g)
}

/// Channel-wise neighborhood attention: queries are rows of `query_feats`,
/// neighbors index rows of `key_feats`.
pub fn psa_core(tape: &mut Tape, p: &Bound, psa: &PsaParams, query_feats: Var, key_feats: Var, nbr: &NeighborIndex) -> Result<Var> {
    let m = rows(tape, query_feats);
    if nbr.rows() != m {
        return Err(Error::param("neighbor table rows do not match the queries"));
    }
    let k = nbr.k;
    let q = psa.query.forward(tape, p, query_feats)?;
    let kf = psa.key.forward(tape, p, key_feats)?;
    // First score layer on [q_i ∥ k_j], evaluated per row then combined.
    let sq = tape.affine(q, p.var(psa.score_wq), Some(p.var(psa.score_b)))?;
    let sk = tape.affine(kf, p.var(psa.score_wk), None)?;
    let self_idx = NeighborIndex::self_loops(m, k);
    let sq_i = tape.gather_rows(sq, &self_idx.indices, k)?;
    let sk_j = tape.gather_rows(sk, &nbr.indices, k)?;
    let pre = tape.add(sq_i, sk_j)?;
    let hidden = tape.relu(pre);
    let (sw, sb) = psa.score_out;
    let scores = tape.affine(hidden, p.var(sw), Some(p.var(sb)))?;
    let alpha = tape.softmax_over_neighbors(scores)?;
    let v = psa.value.forward(tape, p, key_feats)?;
    let v_j = tape.gather_rows(v, &nbr.indices, k)?;
    let weighted = tape.mul(alpha, v_j)?;
    tape.reduce(weighted, Reduction::Sum, 1)
}

/// Attention over the coordinate-space neighborhood of each point
/// (self included) unless `neighbor_override` is given.
pub fn psa(
    tape: &mut Tape,
    p: &Bound,
    params: &PsaParams,
    features: Var,
    coords: Var,
    k: usize,
    neighbor_override: Option<&NeighborIndex>,
) -> Result<Var> {
    let n = rows(tape, coords);
    let owned;
    let nbr = match neighbor_override {
        Some(nb) => nb,
        None => {
            if k + 1 > n {
                return Err(Error::param(format!("attention needs k <= N - 1, got k = {k}, N = {n}")));
            }
            owned = knn_on(tape, coords, coords, k, None)?;
            &owned
        }
    };
    psa_core(tape, p, params, features, features, nbr)
}

/// `max_step · tanh(FC(features))`.
pub fn decode(tape: &mut Tape, p: &Bound, dec: &DecoderParams, features: Var, max_step: f64) -> Result<Var> {
    let raw = dec.mlp.forward(tape, p, features)?;
    let t = tape.tanh(raw);
    Ok(tape.scale(t, max_step))
}

/// Mirror-point generation for one block: `x̃ = x + w₂ d`, a fresh
/// neighborhood around `x̃` that excludes the seed, attention over
/// `[u ∥ x]` pairs with the block's own weights, and `x̄ = x̃ + d̃`.
#[allow(clippy::too_many_arguments)]
pub fn mirror_branch(
    tape: &mut Tape,
    p: &Bound,
    model: &Model,
    block: usize,
    input: Var,
    features: Var,
    displacement: Var,
    denoised: Var,
    cfg: &MirrorConfig,
) -> Result<MirrorRecord> {
    let k = model.hyper.k;
    let n = rows(tape, input);
    if n <= k + 1 {
        return Err(Error::param(format!("mirror branch needs N > k + 1, got N = {n}, k = {k}")));
    }
    let params = &model.blocks[block];
    let seed_step = tape.scale(displacement, cfg.w1);
    let denoised_seed = tape.add(input, seed_step)?;
    let mirror_step = tape.scale(displacement, cfg.w2);
    let mirror_input = tape.add(input, mirror_step)?;
    let cloud = match cfg.neighborhood {
        MirrorNeighborhood::Denoised => denoised,
        MirrorNeighborhood::Input => input,
    };
    let exclude: Vec<usize> = (0..n).collect();
    let nbr = knn_on(tape, mirror_input, cloud, k, Some(&exclude))?;

    let lift_q = params.psa.lift.forward(tape, p, mirror_input)?;
    let query = tape.add(features, lift_q)?;
    let lift_k = params.psa.lift.forward(tape, p, cloud)?;
    let keys = tape.add(features, lift_k)?;
    let refined = psa_core(tape, p, &params.psa, query, keys, &nbr)?;
    let mirror_displacement = decode(tape, p, &params.decoder, refined, model.hyper.max_step)?;
    let denoised_mirror = tape.add(mirror_input, mirror_displacement)?;
    Ok(MirrorRecord {
        seed: input,
        denoised_seed,
        mirror_input,
        denoised_mirror,
        displacement,
        mirror_displacement,
    })
}

/// Full forward pass `X⁰ → X^L`. With `mirror`, every block also records
/// its mirror-point quantities.
pub fn denoise_forward(tape: &mut Tape, p: &Bound, model: &Model, cloud: Var, mirror: Option<&MirrorConfig>) -> Result<DenoiseTrajectory> {
    let s = tape.shape(cloud);
    if s.len() != 2 || s[1] != 3 {
        return Err(Error::param(format!("expected an N×3 cloud, got {s:?}")));
    }
    let k = model.hyper.k;
    let u0 = encode(tape, p, &model.encoder, cloud, k)?;
    let mut traj = DenoiseTrajectory {
        clouds: vec![cloud],
        displacements: Vec::new(),
        features: vec![u0],
        mirror: Vec::new(),
    };
    for (l, block) in model.blocks.iter().enumerate() {
        let x = traj.clouds[l];
        let u = traj.features[l];
        let f = psa(tape, p, &block.psa, u, x, k, None)?;
        let d = decode(tape, p, &block.decoder, f, model.hyper.max_step)?;
        let next = tape.add(x, d)?;
        if let Some(cfg) = mirror {
            let rec = mirror_branch(tape, p, model, l, x, u, d, next, cfg)?;
            traj.mirror.push(rec);
        }
        traj.clouds.push(next);
        traj.displacements.push(d);
        traj.features.push(f);
    }
    Ok(traj)
}

/// Inference helper: runs the forward pass without mirror branches and
/// returns the final cloud.
pub fn denoise_values(model: &Model, cloud: &PointCloud) -> Result<PointCloud> {
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store)?;
    let x = tape.constant(vec![cloud.len(), 3], cloud.flat())?;
    let traj = denoise_forward(&mut tape, &p, model, x, None)?;
    let mut out = PointCloud::from_flat(tape.value(traj.output()))?;
    out.clean_ref = cloud.clean_ref.clone();
    out.noise_meta = cloud.noise_meta.clone();
    Ok(out)
}
