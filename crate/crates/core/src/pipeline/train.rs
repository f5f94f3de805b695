//! Paired-patch training loop.

use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;

use super::config::RunConfig;
use super::data::{EvalCase, TrainingEntry};
use super::eval::evaluate_model;
use crate::autodiff::{AdamState, Tape};
use crate::error::{Error, Result};
use crate::geometry::{sample_paired_patches, PointCloud};
use crate::loss::{baseline_emd_loss, baseline_noise_loss, mirror_triples, total_loss, LossMode};
use crate::network::{denoise_forward, Bound, Model};
use crate::rng::{derive_seed, stream, stream_rng};

/// Mean loss terms over one epoch plus held-out metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss_total: f64,
    pub loss_mpc: f64,
    pub loss_sr: f64,
    pub loss_extra: f64,
    pub wall_seconds: f64,
    pub eval_cd: Option<f64>,
    pub eval_p2m: Option<f64>,
}

impl EpochLog {
    pub const CSV_HEADER: &'static str = "epoch,loss_total,loss_mpc,loss_sr,loss_extra,eval_cd,eval_p2m";

    /// Row matching [`Self::CSV_HEADER`]. Wall time is kept out so logs of
    /// identical runs compare byte for byte.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        format!(
            "{},{:?},{:?},{:?},{:?},{},{}",
            self.epoch,
            self.loss_total,
            self.loss_mpc,
            self.loss_sr,
            self.loss_extra,
            opt(self.eval_cd),
            opt(self.eval_p2m)
        )
    }

    /// Equality ignoring wall time.
    pub fn same_values(&self, other: &EpochLog) -> bool {
        self.csv_row() == other.csv_row()
    }
}

/// Loss terms of a single patch pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairLoss {
    pub total: f64,
    pub mpc: f64,
    pub sr: f64,
    pub extra: f64,
}

/// Largest deviation from `x̂ = (x + x̃)/2`, in units of the spacing of the
/// largest operand.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MidpointStats {
    pub checked: usize,
    pub max_ulps: f64,
}

impl MidpointStats {
    fn merge(&mut self, o: MidpointStats) {
        self.checked += o.checked;
        self.max_ulps = self.max_ulps.max(o.max_ulps);
    }
}

fn ulp(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return f64::MIN_POSITIVE;
    }
    f64::from_bits(x.to_bits() + 1) - x
}

struct PairResult {
    loss: PairLoss,
    grads: Vec<Vec<f64>>,
    midpoint: MidpointStats,
}

/// Loss and parameter gradients of one patch pair under `cfg.loss.mode`.
pub fn pair_loss_and_grads(
    model: &Model,
    cfg: &RunConfig,
    a: &PointCloud,
    b: &PointCloud,
    noise_scale: f64,
    seed: u64,
) -> Result<(PairLoss, Vec<Vec<f64>>)> {
    let r = pair_step(model, cfg, a, b, noise_scale, seed, false)?;
    Ok((r.loss, r.grads))
}

fn pair_step(
    model: &Model,
    cfg: &RunConfig,
    a: &PointCloud,
    b: &PointCloud,
    noise_scale: f64,
    seed: u64,
    check_midpoint: bool,
) -> Result<PairResult> {
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store)?;
    let mode = cfg.loss.mode;
    let mut midpoint = MidpointStats::default();
    let (loss_var, loss) = match mode {
        LossMode::Simpc | LossMode::SrCdOnly | LossMode::SrEmdOnly => {
            let mirror = cfg.loss.mirror();
            let mirror = if mode.needs_mirror() { Some(&mirror) } else { None };
            let xa = tape.constant(vec![a.len(), 3], a.flat())?;
            let xb = tape.constant(vec![b.len(), 3], b.flat())?;
            let ta = denoise_forward(&mut tape, &p, model, xa, mirror)?;
            let tb = denoise_forward(&mut tape, &p, model, xb, mirror)?;
            if check_midpoint {
                for rec in ta.mirror.iter().chain(&tb.mirror) {
                    for t in mirror_triples(&tape, rec) {
                        for c in 0..3 {
                            let (x, xh, xt) = (t.seed[c], t.denoised_seed[c], t.mirror_input[c]);
                            let mid = 0.5 * (x + xt);
                            let scale = ulp(x.abs().max(xh.abs()).max(xt.abs()));
                            midpoint.max_ulps = midpoint.max_ulps.max((xh - mid).abs() / scale);
                        }
                        midpoint.checked += 1;
                    }
                }
            }
            if mode == LossMode::SrEmdOnly {
                let v = baseline_emd_loss(&mut tape, &ta, &tb)?;
                let val = tape.value(v)[0];
                (
                    v,
                    PairLoss {
                        total: val,
                        extra: val,
                        ..Default::default()
                    },
                )
            } else {
                let br = total_loss(&mut tape, &ta, &tb, mode == LossMode::Simpc, cfg.loss.lambda_mpc)?;
                let loss = PairLoss {
                    total: br.total_value,
                    mpc: br.mpc.iter().sum(),
                    sr: br.sr.iter().sum(),
                    extra: 0.0,
                };
                (br.total, loss)
            }
        }
        LossMode::NoiseBaseline => {
            let la = baseline_noise_loss(&mut tape, &p, model, &a.points, noise_scale, derive_seed(seed, 0))?;
            let lb = baseline_noise_loss(&mut tape, &p, model, &b.points, noise_scale, derive_seed(seed, 1))?;
            let v = tape.add(la, lb)?;
            let val = tape.value(v)[0];
            (
                v,
                PairLoss {
                    total: val,
                    extra: val,
                    ..Default::default()
                },
            )
        }
    };
    let grads = tape.backward(loss_var)?;
    let grads = p
        .vars()
        .iter()
        .zip(model.store.tensors())
        .map(|(&v, t)| grads.get_or_zeros(v, t.len()))
        .collect();
    Ok(PairResult { loss, grads, midpoint })
}

/// Hooks and diagnostics for [`train`].
#[derive(Default)]
pub struct TrainOptions<'a> {
    /// Where to write the offending batch if a step produces a non-finite value.
    pub dump_dir: Option<&'a Path>,
    /// Measure the mirror midpoint identity on every point of every step.
    pub check_midpoint: bool,
    /// Held-out clouds scored after evaluation epochs.
    pub eval_cases: &'a [EvalCase],
    /// Called after every epoch with the log and the current weights.
    #[allow(clippy::type_complexity)]
    pub on_epoch: Option<Box<dyn FnMut(&EpochLog, &Model) -> Result<()> + 'a>>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub logs: Vec<EpochLog>,
    pub midpoint: MidpointStats,
}

/// One sampled training pair: entry, variant indices, patch seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairDraw {
    pub entry: usize,
    pub va: usize,
    pub vb: usize,
    pub seed: u64,
}

/// Deterministic batch composition for global step `step`.
pub fn draw_batch(cfg: &RunConfig, data: &[TrainingEntry], step: u64) -> Vec<PairDraw> {
    let mut rng = stream_rng(derive_seed(cfg.seed, step), stream::TRAIN);
    (0..cfg.train.batch)
        .map(|_| {
            let entry = rng.gen_range(0..data.len());
            let nv = data[entry].variants.len();
            let va = rng.gen_range(0..nv);
            let vb = (va + rng.gen_range(1..nv)) % nv;
            PairDraw {
                entry,
                va,
                vb,
                seed: rng.gen(),
            }
        })
        .collect()
}

fn dump_batch(dir: &Path, step: u64, patches: &[(PointCloud, PointCloud)], err: &Error) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("nan_step{step}.json"));
    let body = serde_json::json!({
        "step": step,
        "error": err.to_string(),
        "pairs": patches.iter().map(|(a, b)| serde_json::json!({"a": a.points, "b": b.points})).collect::<Vec<_>>(),
    });
    std::fs::write(&path, body.to_string()).map_err(|e| Error::io(&path, e))
}

/// Trains `model` for `epochs × steps_per_epoch` Adam updates, each on the
/// gradient averaged over `batch` paired patches.
pub fn train(cfg: &RunConfig, data: &[TrainingEntry], mut model: Model, mut opts: TrainOptions<'_>) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::param("training set is empty"));
    }
    let mut adam = AdamState::new(&model.store, cfg.adam());
    let mut logs = Vec::new();
    let mut midpoint = MidpointStats::default();
    let batch = cfg.train.batch as f64;
    for epoch in 1..=cfg.train.epochs {
        let start = Instant::now();
        let mut sums = PairLoss::default();
        for s in 0..cfg.train.steps_per_epoch {
            let step = ((epoch - 1) * cfg.train.steps_per_epoch + s) as u64;
            let draws = draw_batch(cfg, data, step);
            let patches = draws
                .iter()
                .map(|d| {
                    let e = &data[d.entry];
                    sample_paired_patches(&e.variants[d.va], &e.variants[d.vb], cfg.train.patch_size, d.seed)
                })
                .collect::<Result<Vec<_>>>()?;
            let results: Vec<Result<PairResult>> = patches
                .par_iter()
                .zip(&draws)
                .map(|((a, b), d)| pair_step(&model, cfg, a, b, data[d.entry].noise.scale, d.seed, opts.check_midpoint))
                .collect();
            let mut grads: Vec<Vec<f64>> = model.store.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
            for r in results {
                let r = match r {
                    Ok(r) => r,
                    Err(err @ Error::Numeric(_)) => {
                        if let Some(dir) = opts.dump_dir {
                            dump_batch(dir, step, &patches, &err)?;
                        }
                        return Err(Error::Numeric(format!("step {step}: {err}")));
                    }
                    Err(e) => return Err(e),
                };
                for (acc, g) in grads.iter_mut().zip(&r.grads) {
                    for (x, y) in acc.iter_mut().zip(g) {
                        *x += y / batch;
                    }
                }
                sums.total += r.loss.total;
                sums.mpc += r.loss.mpc;
                sums.sr += r.loss.sr;
                sums.extra += r.loss.extra;
                midpoint.merge(r.midpoint);
            }
            if grads.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Numeric(format!("step {step}: non-finite gradient")));
            }
            adam.step(&mut model.store, &grads)?;
        }
        let n = batch * cfg.train.steps_per_epoch as f64;
        let evaluate =
            !opts.eval_cases.is_empty() && (epoch == cfg.train.epochs || (cfg.train.eval_every > 0 && epoch % cfg.train.eval_every == 0));
        let (eval_cd, eval_p2m) = if evaluate {
            let rows = evaluate_model(&model, opts.eval_cases, 1)?;
            let m = rows.len() as f64;
            let cd = rows.iter().map(|r| r.denoised.cd).sum::<f64>() / m;
            let p2m = rows.iter().map(|r| r.denoised.p2m.unwrap_or(0.0)).sum::<f64>() / m;
            (Some(cd), Some(p2m))
        } else {
            (None, None)
        };
        let log = EpochLog {
            epoch,
            loss_total: sums.total / n,
            loss_mpc: sums.mpc / n,
            loss_sr: sums.sr / n,
            loss_extra: sums.extra / n,
            wall_seconds: start.elapsed().as_secs_f64(),
            eval_cd,
            eval_p2m,
        };
        if let Some(cb) = opts.on_epoch.as_mut() {
            cb(&log, &model)?;
        }
        logs.push(log);
    }
    Ok(TrainOutcome { model, logs, midpoint })
}
