//! One function per CLI subcommand. Each takes a validated [`RunConfig`]
//! and writes its outputs below the configured paths.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::data::{build_heldout, build_training, read_dataset, write_dataset, EvalCase, Manifest};
use super::eval::{denoise_iterations, eval_csv, evaluate_model, metric_report, EvalRow};
use super::train::{train, EpochLog, TrainOptions, TrainOutcome};
use crate::autodiff::{read_checkpoint, write_checkpoint, Checkpoint};
use crate::error::{Error, Result};
use crate::io::{read_cloud, read_off, write_cloud};
use crate::loss::LossMode;
use crate::metrics::{MetricReport, CSV_HEADER};
use crate::network::{Hyper, Model};
use crate::theory::{run_theory, TheoryReport};

pub const MODEL_FILE: &str = "model.ckpt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const TIMING_FILE: &str = "train_timing.csv";
pub const EVAL_FILE: &str = "eval.csv";
pub const ABLATION_FILE: &str = "ablation.csv";
pub const THEORY_FILE: &str = "theory.json";

/// Metadata stored alongside the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub hyper: Hyper,
    pub epoch: usize,
    pub loss_mode: LossMode,
    pub seed: u64,
}

pub fn save_model(path: &Path, model: &Model, meta: &CheckpointMeta) -> Result<()> {
    let ckpt = Checkpoint {
        meta: serde_json::to_string(meta).expect("meta serializes"),
        params: model.store.clone(),
    };
    write_checkpoint(path, &ckpt)
}

pub fn load_model(path: &Path) -> Result<(Model, CheckpointMeta)> {
    let ckpt = read_checkpoint(path)?;
    let meta: CheckpointMeta = serde_json::from_str(&ckpt.meta).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: format!("checkpoint metadata: {e}"),
    })?;
    let model = Model::from_store(meta.hyper, ckpt.params)?;
    Ok((model, meta))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<Manifest> {
    let entries = build_training(cfg)?;
    write_dataset(&cfg.paths.data_dir, cfg.seed, &entries)
}

/// Held-out clouds scored in the per-epoch log: the unseen shape (or the
/// first training shape) at the evaluation level closest to the first
/// training noise level.
fn epoch_eval_cases(cfg: &RunConfig, heldout: &[EvalCase]) -> Vec<EvalCase> {
    let target = cfg.data.noise[0].scale;
    let kind = cfg.eval.holdout_shape.unwrap_or(cfg.data.shapes[0].kind);
    let best = heldout
        .iter()
        .filter(|c| c.shape == kind)
        .min_by(|a, b| (a.noise.scale - target).abs().total_cmp(&(b.noise.scale - target).abs()));
    best.into_iter().cloned().collect()
}

/// Trains on the dataset in `data_dir`, appending to the epoch log and
/// checkpointing every `checkpoint_every` epochs and at the end.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let (_, data) = read_dataset(&cfg.paths.data_dir)?;
    let ckpt_dir = cfg.paths.checkpoint_dir.clone();
    let report_dir = cfg.paths.report_dir.clone();
    create_dir(&ckpt_dir)?;
    create_dir(&report_dir)?;
    let heldout = build_heldout(cfg)?;
    let eval_cases = epoch_eval_cases(cfg, &heldout);

    let log_path = report_dir.join(TRAIN_LOG_FILE);
    let timing_path = report_dir.join(TIMING_FILE);
    write_text(&log_path, &format!("{}\n", EpochLog::CSV_HEADER))?;
    write_text(&timing_path, "epoch,wall_seconds\n")?;
    let append = |path: &Path, line: String| -> Result<()> {
        let mut f = fs::OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?;
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))
    };

    let model = Model::new(cfg.model, cfg.seed)?;
    let every = cfg.train.checkpoint_every;
    let meta = |epoch| CheckpointMeta {
        hyper: cfg.model,
        epoch,
        loss_mode: cfg.loss.mode,
        seed: cfg.seed,
    };
    let on_epoch = |log: &EpochLog, model: &Model| -> Result<()> {
        append(&log_path, log.csv_row())?;
        append(&timing_path, format!("{},{:.3}", log.epoch, log.wall_seconds))?;
        if every > 0 && log.epoch.is_multiple_of(every) {
            save_model(&ckpt_dir.join(format!("epoch_{:04}.ckpt", log.epoch)), model, &meta(log.epoch))?;
            save_model(&ckpt_dir.join(MODEL_FILE), model, &meta(log.epoch))?;
        }
        Ok(())
    };
    let opts = TrainOptions {
        dump_dir: Some(&report_dir),
        check_midpoint: false,
        eval_cases: &eval_cases,
        on_epoch: Some(Box::new(on_epoch)),
    };
    let outcome = train(cfg, &data, model, opts)?;
    save_model(&ckpt_dir.join(MODEL_FILE), &outcome.model, &meta(cfg.train.epochs))?;
    Ok(outcome)
}

fn check_hyper(cfg: &RunConfig, meta: &CheckpointMeta) -> Result<()> {
    if meta.hyper != cfg.model {
        return Err(Error::Config(format!(
            "checkpoint was trained with {:?} but the config specifies {:?}",
            meta.hyper, cfg.model
        )));
    }
    Ok(())
}

/// Denoises one cloud. Writes the final result to `output` and, with
/// `keep_intermediates`, every pass as `<stem>_iterN.<ext>` next to it.
pub fn cmd_denoise(
    cfg: &RunConfig,
    checkpoint: &Path,
    input: &Path,
    output: &Path,
    iterations: usize,
    keep_intermediates: bool,
) -> Result<()> {
    if iterations == 0 {
        return Err(Error::Config("iterations must be >= 1".into()));
    }
    let (model, meta) = load_model(checkpoint)?;
    check_hyper(cfg, &meta)?;
    let cloud = read_cloud(input)?;
    if model.hyper.k >= cloud.len() {
        return Err(Error::param(format!(
            "k = {} needs more than {} points",
            model.hyper.k,
            cloud.len()
        )));
    }
    let passes = denoise_iterations(&model, &cloud, iterations)?;
    if keep_intermediates {
        let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("denoised");
        let ext = output.extension().and_then(|s| s.to_str()).unwrap_or("ply");
        for (i, c) in passes.iter().enumerate() {
            write_cloud(&output.with_file_name(format!("{stem}_iter{}.{ext}", i + 1)), c)?;
        }
    }
    write_cloud(output, passes.last().unwrap())
}

/// Files for a single-cloud evaluation.
#[derive(Clone, Debug)]
pub struct EvalFiles {
    pub denoised: PathBuf,
    pub clean: PathBuf,
    pub mesh: Option<PathBuf>,
    /// Noisy input, scored as the reference row.
    pub noisy: Option<PathBuf>,
}

/// Scores one denoised cloud; returns CSV text with `source` as the first
/// column and the noisy reference row first when given.
pub fn cmd_eval_files(files: &EvalFiles) -> Result<String> {
    let clean = read_cloud(&files.clean)?;
    let mesh = files.mesh.as_deref().map(read_off).transpose()?;
    let denoised = read_cloud(&files.denoised)?;
    let shape = files.clean.file_stem().and_then(|s| s.to_str()).unwrap_or("cloud");
    let row = |cloud: &crate::geometry::PointCloud| -> Result<MetricReport> {
        let (kind, scale) = match &denoised.noise_meta {
            Some(m) => (m.kind.name().to_string(), m.scale),
            None => ("unknown".to_string(), 0.0),
        };
        metric_report(shape, &kind, scale, cloud, &clean, mesh.as_ref())
    };
    let mut out = format!("source,{CSV_HEADER}\n");
    if let Some(p) = &files.noisy {
        let noisy = read_cloud(p)?;
        out.push_str(&format!("noisy,{}\n", row(&noisy)?.csv_row()));
    }
    out.push_str(&format!("denoised,{}\n", row(&denoised)?.csv_row()));
    Ok(out)
}

/// Scores a checkpoint on the held-out suite and writes `eval.csv`.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path) -> Result<Vec<EvalRow>> {
    let (model, meta) = load_model(checkpoint)?;
    check_hyper(cfg, &meta)?;
    let rows = evaluate_model(&model, &build_heldout(cfg)?, cfg.eval.iterations)?;
    write_text(&cfg.paths.report_dir.join(EVAL_FILE), &eval_csv(&rows))?;
    Ok(rows)
}

/// One trained configuration of the ablation table.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub group: String,
    pub label: String,
    pub loss_mode: LossMode,
    pub w2: f64,
    /// Mean held-out CD and P2M per evaluation noise level.
    pub cd: Vec<f64>,
    pub p2m: Vec<f64>,
}

pub fn ablation_csv(scales: &[f64], rows: &[AblationRow]) -> String {
    let mut s = String::from("group,label,loss_mode,w2");
    for metric in ["cd_e5", "p2m_e5"] {
        for sc in scales {
            s.push_str(&format!(",{metric}@{sc:?}"));
        }
    }
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{},{},{:?}", r.group, r.label, r.loss_mode, r.w2));
        for v in r.cd.iter().chain(&r.p2m) {
            s.push_str(&format!(",{:?}", v * crate::metrics::E5));
        }
        s.push('\n');
    }
    s
}

/// Mean CD and P2M per evaluation level over the held-out shapes used in
/// training.
fn summarize(cfg: &RunConfig, rows: &[EvalRow]) -> (Vec<f64>, Vec<f64>) {
    let trained: Vec<&str> = cfg.data.shapes.iter().map(|s| s.kind.name()).collect();
    let mut cd = Vec::new();
    let mut p2m = Vec::new();
    for &scale in &cfg.eval.noise_scales {
        let sel: Vec<&EvalRow> = rows
            .iter()
            .filter(|r| r.denoised.noise_scale == scale && trained.contains(&r.denoised.shape.as_str()))
            .collect();
        let n = sel.len().max(1) as f64;
        cd.push(sel.iter().map(|r| r.denoised.cd).sum::<f64>() / n);
        p2m.push(sel.iter().map(|r| r.denoised.p2m.unwrap_or(0.0)).sum::<f64>() / n);
    }
    (cd, p2m)
}

/// Trains and evaluates one configuration in memory.
pub fn train_and_score(cfg: &RunConfig, data: &[super::data::TrainingEntry], heldout: &[EvalCase]) -> Result<(Model, Vec<EvalRow>)> {
    let model = Model::new(cfg.model, cfg.seed)?;
    let out = train(cfg, data, model, TrainOptions::default())?;
    let rows = evaluate_model(&out.model, heldout, cfg.eval.iterations)?;
    Ok((out.model, rows))
}

/// Loss-type rows followed by extension-distance rows, each trained from
/// the same seed on the same dataset. The identity (untrained) row is added
/// for reference.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    let (_, data) = read_dataset(&cfg.paths.data_dir)?;
    let heldout = build_heldout(cfg)?;
    let mut cache: BTreeMap<(String, u64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut run = |mode: LossMode, w2: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let key = (mode.name().to_string(), w2.to_bits());
        if let Some(v) = cache.get(&key) {
            return Ok(v.clone());
        }
        let mut c = cfg.clone();
        c.loss.mode = mode;
        c.loss.w2 = w2;
        c.validate()?;
        let (_, rows) = train_and_score(&c, &data, &heldout)?;
        let v = summarize(&c, &rows);
        cache.insert(key, v.clone());
        Ok(v)
    };
    let mut rows = Vec::new();
    let noisy: Vec<EvalRow> = heldout
        .iter()
        .map(|c| {
            let r = metric_report(
                c.shape.name(),
                c.noise.kind.name(),
                c.noise.scale,
                &c.noisy,
                &c.clean,
                Some(&c.mesh),
            )?;
            Ok(EvalRow {
                noisy: r.clone(),
                denoised: r,
            })
        })
        .collect::<Result<_>>()?;
    let (cd, p2m) = summarize(cfg, &noisy);
    rows.push(AblationRow {
        group: "reference".into(),
        label: "noisy_input".into(),
        loss_mode: cfg.loss.mode,
        w2: cfg.loss.w2,
        cd,
        p2m,
    });
    for &mode in &cfg.ablation.loss_modes {
        let (cd, p2m) = run(mode, cfg.loss.w2)?;
        rows.push(AblationRow {
            group: "loss".into(),
            label: mode.name().into(),
            loss_mode: mode,
            w2: cfg.loss.w2,
            cd,
            p2m,
        });
    }
    for &w2 in &cfg.ablation.w2_values {
        let (cd, p2m) = run(LossMode::Simpc, w2)?;
        rows.push(AblationRow {
            group: "extension".into(),
            label: format!("w2={w2:?}"),
            loss_mode: LossMode::Simpc,
            w2,
            cd,
            p2m,
        });
    }
    write_text(
        &cfg.paths.report_dir.join(ABLATION_FILE),
        &ablation_csv(&cfg.eval.noise_scales, &rows),
    )?;
    Ok(rows)
}

pub fn cmd_theory(cfg: &RunConfig) -> Result<TheoryReport> {
    let report = run_theory(&cfg.theory, cfg.seed)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_text(&cfg.paths.report_dir.join(THEORY_FILE), &(text + "\n"))?;
    Ok(report)
}
