//! Run configuration. TOML with fixed sections; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autodiff::AdamConfig;
use crate::error::{Error, Result};
use crate::geometry::{NoiseKind, ShapeKind};
use crate::loss::LossMode;
use crate::network::{Hyper, MirrorConfig, MirrorNeighborhood};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub shapes: Vec<ShapeSpec>,
    pub noise: Vec<NoiseSpec>,
    /// Independent noisy variants written per (shape, noise) pair.
    pub variants: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            shapes: vec![
                ShapeSpec {
                    kind: ShapeKind::Sphere,
                    points: 2048,
                },
                ShapeSpec {
                    kind: ShapeKind::Torus,
                    points: 2048,
                },
            ],
            noise: vec![NoiseSpec {
                kind: NoiseKind::Gaussian,
                scale: 0.02,
            }],
            variants: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub steps_per_epoch: usize,
    /// Patch pairs per optimizer step.
    pub batch: usize,
    pub lr: f64,
    pub patch_size: usize,
    pub checkpoint_every: usize,
    /// Evaluate on held-out data every this many epochs (0 = only at the end).
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 40,
            steps_per_epoch: 50,
            batch: 4,
            lr: 1e-3,
            patch_size: 128,
            checkpoint_every: 10,
            eval_every: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub mode: LossMode,
    pub w1: f64,
    pub w2: f64,
    /// Weight of the summed mirror-consistency term against the mean-based
    /// similarity term.
    pub lambda_mpc: f64,
    pub mirror_neighborhood: MirrorNeighborhood,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            mode: LossMode::Simpc,
            w1: 1.0,
            w2: 2.0,
            lambda_mpc: 1e-3,
            mirror_neighborhood: MirrorNeighborhood::Denoised,
        }
    }
}

impl LossConfig {
    pub fn mirror(&self) -> MirrorConfig {
        MirrorConfig {
            w1: self.w1,
            w2: self.w2,
            neighborhood: self.mirror_neighborhood,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Held-out Gaussian noise levels.
    pub noise_scales: Vec<f64>,
    /// Shape kind never seen in training, evaluated alongside.
    pub holdout_shape: Option<ShapeKind>,
    /// Outer denoising passes at evaluation time.
    pub iterations: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            noise_scales: vec![0.01, 0.02, 0.03],
            holdout_shape: Some(ShapeKind::CubeSurface),
            iterations: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub loss_modes: Vec<LossMode>,
    pub w2_values: Vec<f64>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            loss_modes: vec![LossMode::SrCdOnly, LossMode::SrEmdOnly, LossMode::Simpc],
            w2_values: vec![1.5, 2.0, 2.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryConfig {
    pub landing_samples: usize,
    pub moment_samples: usize,
    pub moment_instances: usize,
    pub taylor_samples: usize,
    pub projection_points: usize,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            landing_samples: 1_000_000,
            moment_samples: 1_000_000,
            moment_instances: 50,
            taylor_samples: 100_000,
            projection_points: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub data_dir: PathBuf,
    pub checkpoint_dir: PathBuf,
    pub report_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            data_dir: "run/data".into(),
            checkpoint_dir: "run/checkpoints".into(),
            report_dir: "run/reports".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub model: Hyper,
    pub loss: LossConfig,
    pub eval: EvalConfig,
    pub ablation: AblationConfig,
    pub theory: TheoryConfig,
    pub paths: PathsConfig,
}


impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.train.lr,
            ..AdamConfig::default()
        }
    }

    /// Points every path below `root`.
    pub fn rooted_at(mut self, root: &Path) -> Self {
        self.paths.data_dir = root.join("data");
        self.paths.checkpoint_dir = root.join("checkpoints");
        self.paths.report_dir = root.join("reports");
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        self.model.validate()?;
        if self.train.epochs < 1 {
            return bad("train.epochs must be >= 1");
        }
        if self.train.batch < 1 || self.train.steps_per_epoch < 1 {
            return bad("train.batch and train.steps_per_epoch must be >= 1");
        }
        if !(self.train.lr > 0.0) {
            return bad("train.lr must be positive");
        }
        if self.train.patch_size <= self.model.k + 1 {
            return bad("train.patch_size must exceed model.k + 1");
        }
        if !(self.loss.w2 > self.loss.w1) {
            return bad("loss.w2 must be greater than loss.w1");
        }
        if !(self.loss.lambda_mpc >= 0.0) {
            return bad("loss.lambda_mpc must be non-negative");
        }
        if self.data.shapes.is_empty() || self.data.noise.is_empty() {
            return bad("data.shapes and data.noise must be non-empty");
        }
        if self.data.variants < 2 {
            return bad("data.variants must be >= 2");
        }
        for s in &self.data.shapes {
            if s.points < self.train.patch_size {
                return bad("every shape needs at least train.patch_size points");
            }
        }
        for n in &self.data.noise {
            if !(n.scale > 0.0) {
                return bad("noise scales must be positive");
            }
        }
        if self.eval.iterations < 1 {
            return bad("eval.iterations must be >= 1");
        }
        Ok(())
    }
}
