use rand::seq::SliceRandom;
use rand::Rng;
use simpc::autodiff::Tape;
use simpc::geometry::{knn_points, PointCloud};
use simpc::loss::{baseline_emd_loss, mirror_triples, mpc_loss, sr_loss, total_loss};
use simpc::metrics::{chamfer_points, emd_points};
use simpc::network::*;
use simpc::pipeline::{pair_loss_and_grads, RunConfig};
use simpc::rng::{stream, stream_rng};

fn hyper(k: usize, c: usize, blocks: usize) -> Hyper {
    Hyper {
        k,
        channels: c,
        blocks,
        encoder_layers: 3,
        max_step: 1.0,
    }
}

/// Model with every weight randomized so no branch is trivially zero.
fn random_model(h: Hyper, seed: u64, scale: f64) -> Model {
    let mut m = Model::new(h, seed).unwrap();
    let mut rng = stream_rng(seed, stream::INIT + 100);
    let flat: Vec<f64> = m.store.flatten().iter().map(|v| v + scale * rng.gen_range(-1.0..1.0)).collect();
    m.store.set_flat(&flat).unwrap();
    m
}

fn random_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = stream_rng(seed, stream::SHAPE);
    PointCloud::new(
        (0..n)
            .map(|_| [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)])
            .collect(),
    )
    .unwrap()
}

fn affine(x: &[f64], w: &[f64], b: &[f64], din: usize, dout: usize) -> Vec<f64> {
    (0..dout)
        .map(|o| b[o] + (0..din).map(|i| x[i] * w[i * dout + o]).sum::<f64>())
        .collect()
}

fn mlp(m: &Model, net: &Mlp, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for (l, &(w, b)) in net.layers.iter().enumerate() {
        let (din, dout) = (net.widths[l], net.widths[l + 1]);
        h = affine(&h, &m.store.get(w).values, &m.store.get(b).values, din, dout);
        if l + 1 < net.layers.len() {
            h.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
    h
}

#[test]
fn attention_matches_naive_loops() {
    let (n, c, k) = (32, 8, 6);
    let model = random_model(hyper(k, c, 1), 1, 0.2);
    let psa_p = &model.blocks[0].psa;
    let mut rng = stream_rng(2, 2);
    let feats: Vec<f64> = (0..n * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let coords = random_cloud(n, 3);

    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store).unwrap();
    let u = tape.constant(vec![n, c], feats.clone()).unwrap();
    let x = tape.constant(vec![n, 3], coords.flat()).unwrap();
    let out = psa(&mut tape, &p, psa_p, u, x, k, None).unwrap();
    let got = tape.value(out).to_vec();

    let nbr = knn_points(&coords.points, &coords.points, k, None).unwrap();
    let row = |i: usize| &feats[i * c..(i + 1) * c];
    let get = |s: usize| model.store.get(s).values.clone();
    for i in 0..n {
        let q = mlp(&model, &psa_p.query, row(i));
        let mut scores = Vec::new();
        let mut values = Vec::new();
        for &j in nbr.row(i) {
            let kf = mlp(&model, &psa_p.key, row(j));
            let a = affine(&q, &get(psa_p.score_wq), &get(psa_p.score_b), c, c);
            let b = affine(&kf, &get(psa_p.score_wk), &vec![0.0; c], c, c);
            let h: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y).max(0.0)).collect();
            scores.push(affine(&h, &get(psa_p.score_out.0), &get(psa_p.score_out.1), c, c));
            values.push(mlp(&model, &psa_p.value, row(j)));
        }
        for ch in 0..c {
            let mx = scores.iter().map(|s| s[ch]).fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|s| (s[ch] - mx).exp()).sum();
            let want: f64 = scores.iter().zip(&values).map(|(s, v)| (s[ch] - mx).exp() / z * v[ch]).sum();
            let g = got[i * c + ch];
            assert!(
                (g - want).abs() <= 1e-12 * want.abs().max(1.0),
                "point {i} channel {ch}: {g} vs {want}"
            );
        }
    }
}

#[test]
fn fresh_model_is_identity() {
    let model = Model::new(hyper(8, 16, 2), 0).unwrap();
    let cloud = random_cloud(40, 1);
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store).unwrap();
    let x = tape.constant(vec![40, 3], cloud.flat()).unwrap();
    let traj = denoise_forward(&mut tape, &p, &model, x, Some(&MirrorConfig::default())).unwrap();
    assert_eq!(traj.clouds.len(), 3);
    for v in &traj.clouds {
        assert_eq!(tape.value(*v), cloud.flat().as_slice());
    }
    for rec in &traj.mirror {
        let m = mpc_loss(&mut tape, rec).unwrap();
        assert_eq!(tape.value(m)[0], 0.0);
    }
}

#[test]
fn displacements_are_bounded() {
    let mut h = hyper(8, 16, 2);
    h.max_step = 0.05;
    let model = random_model(h, 4, 3.0);
    let cloud = random_cloud(40, 2);
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store).unwrap();
    let x = tape.constant(vec![40, 3], cloud.flat()).unwrap();
    let traj = denoise_forward(&mut tape, &p, &model, x, None).unwrap();
    for d in &traj.displacements {
        assert!(tape.value(*d).iter().all(|v| v.abs() <= 0.05));
    }
}

#[test]
fn too_few_points_rejected() {
    let model = Model::new(hyper(8, 16, 1), 0).unwrap();
    assert!(denoise_values(&model, &random_cloud(8, 0)).is_err());
    let cloud = random_cloud(9, 0);
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store).unwrap();
    let x = tape.constant(vec![9, 3], cloud.flat()).unwrap();
    assert!(denoise_forward(&mut tape, &p, &model, x, Some(&MirrorConfig::default())).is_err());
}

#[test]
fn forward_commutes_with_permutation() {
    let model = random_model(hyper(8, 16, 2), 5, 0.1);
    for trial in 0..5 {
        let cloud = random_cloud(48, 100 + trial);
        let mut perm: Vec<usize> = (0..48).collect();
        perm.shuffle(&mut stream_rng(trial, 9));
        let permuted = PointCloud::new(perm.iter().map(|&i| cloud.points[i]).collect()).unwrap();
        let a = denoise_values(&model, &cloud).unwrap();
        let b = denoise_values(&model, &permuted).unwrap();
        for (r, &i) in perm.iter().enumerate() {
            for c in 0..3 {
                assert!((b.points[r][c] - a.points[i][c]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn mirror_point_is_extension_and_seed_is_midpoint() {
    let model = random_model(hyper(8, 16, 2), 6, 0.1);
    let cloud = random_cloud(48, 7);
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store).unwrap();
    let x = tape.constant(vec![48, 3], cloud.flat()).unwrap();
    let traj = denoise_forward(&mut tape, &p, &model, x, Some(&MirrorConfig::default())).unwrap();
    for rec in &traj.mirror {
        for t in mirror_triples(&tape, rec) {
            for c in 0..3 {
                assert!(t.displacement[c] != 0.0);
                assert_eq!(t.mirror_input[c], t.seed[c] + 2.0 * t.displacement[c]);
                let mid = 0.5 * (t.seed[c] + t.mirror_input[c]);
                let scale = t.seed[c].abs().max(t.mirror_input[c].abs()).max(t.denoised_seed[c].abs());
                assert!((t.denoised_seed[c] - mid).abs() <= scale * f64::EPSILON);
            }
        }
    }
}

#[test]
fn mirror_branch_shares_block_weights() {
    let model = random_model(hyper(8, 16, 1), 8, 0.1);
    assert!(model.store.names().iter().all(|n| !n.contains("mirror")));
    let cloud = random_cloud(48, 9);
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store).unwrap();
    let x = tape.constant(vec![48, 3], cloud.flat()).unwrap();
    let traj = denoise_forward(&mut tape, &p, &model, x, Some(&MirrorConfig::default())).unwrap();
    let rec = traj.mirror[0];
    // Only the mirror term: its gradient reaches the encoder, the block's
    // attention and decoder, and the coordinate lift.
    let diff = tape.sub(rec.mirror_input, rec.denoised_mirror).unwrap();
    let sq = tape.mul(diff, diff).unwrap();
    let l = tape.sum_all(sq);
    let g = tape.backward(l).unwrap();
    for prefix in ["encoder.0", "block.0.psa.query", "block.0.psa.lift", "block.0.decoder.2"] {
        let slot = model.store.names().iter().position(|n| n.starts_with(prefix)).unwrap();
        let grad = g.get_or_zeros(p.var(slot), model.store.get(slot).len());
        assert!(grad.iter().any(|v| *v != 0.0), "{prefix} receives no gradient");
    }
}

#[test]
fn mirror_neighborhood_excludes_the_seed() {
    // With w₂ = 0 the mirror query sits exactly on its seed, which must
    // still be left out of its own neighborhood.
    let model = random_model(hyper(4, 8, 1), 10, 0.1);
    let cloud = random_cloud(20, 11);
    let cfg = MirrorConfig {
        w1: 1.0,
        w2: 0.0,
        neighborhood: MirrorNeighborhood::Input,
    };
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store).unwrap();
    let x = tape.constant(vec![20, 3], cloud.flat()).unwrap();
    let u = encode(&mut tape, &p, &model.encoder, x, 4).unwrap();
    let f = psa(&mut tape, &p, &model.blocks[0].psa, u, x, 4, None).unwrap();
    let d = decode(&mut tape, &p, &model.blocks[0].decoder, f, 1.0).unwrap();
    let next = tape.add(x, d).unwrap();
    let rec = mirror_branch(&mut tape, &p, &model, 0, x, u, d, next, &cfg).unwrap();
    assert_eq!(tape.value(rec.mirror_input), tape.value(x));
    let excl: Vec<usize> = (0..20).collect();
    let nb = knn_points(&cloud.points, &cloud.points, 4, Some(&excl)).unwrap();
    for i in 0..20 {
        assert!(!nb.row(i).contains(&i));
    }
}

#[test]
fn mpc_hand_example() {
    let mut tape = Tape::new();
    let v = |t: &mut Tape, x: Vec<f64>| t.constant(vec![2, 3], x).unwrap();
    let seed = v(&mut tape, vec![0.0; 6]);
    let ds = v(&mut tape, vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
    let dm = v(&mut tape, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let rec = MirrorRecord {
        seed,
        denoised_seed: ds,
        mirror_input: seed,
        denoised_mirror: dm,
        displacement: seed,
        mirror_displacement: seed,
    };
    let m = mpc_loss(&mut tape, &rec).unwrap();
    assert_eq!(tape.value(m)[0], 1.0 + 4.0 + 1.0);
}

#[test]
fn step_zero_loss_equals_identity_recomputation() {
    let model = Model::new(hyper(8, 16, 2), 0).unwrap();
    let a = random_cloud(48, 20);
    let b = random_cloud(48, 21);
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store).unwrap();
    let xa = tape.constant(vec![48, 3], a.flat()).unwrap();
    let xb = tape.constant(vec![48, 3], b.flat()).unwrap();
    let ta = denoise_forward(&mut tape, &p, &model, xa, Some(&MirrorConfig::default())).unwrap();
    let tb = denoise_forward(&mut tape, &p, &model, xb, Some(&MirrorConfig::default())).unwrap();
    let s1 = sr_loss(&mut tape, &ta, &tb, 1).unwrap();
    let br = total_loss(&mut tape, &ta, &tb, true, 1.0).unwrap();
    let cd = chamfer_points(&a.points, &b.points).unwrap();
    assert!((tape.value(s1)[0] - 3.0 * cd).abs() < 1e-15);
    assert!((br.total_value - 6.0 * cd).abs() < 1e-15);
    assert_eq!(br.mpc, vec![0.0, 0.0]);
    assert!(sr_loss(&mut tape, &ta, &tb, 0).is_err());
    assert!(total_loss(&mut tape, &ta, &tb, true, 1.0).is_ok());

    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store).unwrap();
    let xa = tape.constant(vec![48, 3], a.flat()).unwrap();
    let ta = denoise_forward(&mut tape, &p, &model, xa, None).unwrap();
    assert!(matches!(total_loss(&mut tape, &ta, &ta, true, 1.0), Err(simpc::Error::State(_))));
}

#[test]
fn emd_objective_matches_hungarian_recomputation() {
    let model = random_model(hyper(8, 16, 2), 12, 0.05);
    let a = random_cloud(40, 30);
    let b = random_cloud(40, 31);
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store).unwrap();
    let xa = tape.constant(vec![40, 3], a.flat()).unwrap();
    let xb = tape.constant(vec![40, 3], b.flat()).unwrap();
    let ta = denoise_forward(&mut tape, &p, &model, xa, None).unwrap();
    let tb = denoise_forward(&mut tape, &p, &model, xb, None).unwrap();
    let l = baseline_emd_loss(&mut tape, &ta, &tb).unwrap();
    let pts = |v: &[f64]| v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect::<Vec<_>>();
    let da = pts(tape.value(ta.output()));
    let db = pts(tape.value(tb.output()));
    let want = emd_points(&da, &b.points, 64).unwrap().cost
        + emd_points(&db, &a.points, 64).unwrap().cost
        + emd_points(&da, &db, 64).unwrap().cost;
    assert!((tape.value(l)[0] - want).abs() < 1e-12);
}

#[test]
fn end_to_end_parameter_gradients() {
    // Central differences on 120 sampled parameters and the full objective.
    let mut cfg = RunConfig::default();
    cfg.model = hyper(8, 16, 2);
    let model = random_model(cfg.model, 13, 0.05);
    let a = random_cloud(48, 40);
    let b = random_cloud(48, 41);
    let (_, grads) = pair_loss_and_grads(&model, &cfg, &a, &b, 0.02, 0).unwrap();
    let flat_grad: Vec<f64> = grads.concat();
    let base = model.store.flatten();
    let mut rng = stream_rng(14, 14);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..120 {
        let i = rng.gen_range(0..base.len());
        let eval = |delta: f64| {
            let mut m = model.clone();
            let mut f = base.clone();
            f[i] += delta;
            m.store.set_flat(&f).unwrap();
            pair_loss_and_grads(&m, &cfg, &a, &b, 0.02, 0).unwrap().0.total
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        worst = worst.max((flat_grad[i] - fd).abs() / fd.abs().max(1.0));
    }
    assert!(worst < 1e-3, "{worst:e}");
}
