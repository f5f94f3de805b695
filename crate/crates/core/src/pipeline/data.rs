//! Synthetic datasets: clean shapes, paired noisy variants for training and
//! held-out noisy copies for evaluation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{NoiseSpec, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::{add_noise, make_shape, NoiseKind, NoiseModel, PointCloud, ShapeKind, TriangleMesh};
use crate::io::{read_cloud, read_off, write_cloud, write_off};
use crate::rng::derive_seed;

// Seed-tree branches. Training and held-out noise never share a branch.
const SHAPE_BRANCH: u64 = 0x5348;
const TRAIN_NOISE_BRANCH: u64 = 0x5452;
const HELDOUT_NOISE_BRANCH: u64 = 0x484f;

fn shape_seed(seed: u64, shape_index: usize) -> u64 {
    derive_seed(derive_seed(seed, SHAPE_BRANCH), shape_index as u64)
}

fn noise_seed(seed: u64, branch: u64, shape_index: usize, noise_index: usize, variant: usize) -> u64 {
    let s = derive_seed(derive_seed(seed, branch), shape_index as u64);
    derive_seed(derive_seed(s, noise_index as u64), variant as u64)
}

/// One clean shape with its noisy variants under one noise spec.
#[derive(Clone, Debug)]
pub struct TrainingEntry {
    pub shape: ShapeKind,
    pub noise: NoiseSpec,
    pub clean: PointCloud,
    pub mesh: TriangleMesh,
    pub variants: Vec<PointCloud>,
}

/// A held-out noisy cloud with its ground truth.
#[derive(Clone, Debug)]
pub struct EvalCase {
    pub shape: ShapeKind,
    pub noise: NoiseSpec,
    pub clean: PointCloud,
    pub mesh: TriangleMesh,
    pub noisy: PointCloud,
}

/// Builds every (shape, noise) training entry in memory.
pub fn build_training(cfg: &RunConfig) -> Result<Vec<TrainingEntry>> {
    let mut out = Vec::new();
    for (si, spec) in cfg.data.shapes.iter().enumerate() {
        let (clean, mesh) = make_shape(spec.kind, spec.points, shape_seed(cfg.seed, si))?;
        let clean = clean.with_ref(clean_name(spec.kind));
        for (ni, noise) in cfg.data.noise.iter().enumerate() {
            let variants = (0..cfg.data.variants)
                .map(|v| {
                    let model = NoiseModel::new(noise.kind, noise.scale, noise_seed(cfg.seed, TRAIN_NOISE_BRANCH, si, ni, v))?;
                    add_noise(&clean, &model)
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(TrainingEntry {
                shape: spec.kind,
                noise: noise.clone(),
                clean: clean.clone(),
                mesh: mesh.clone(),
                variants,
            });
        }
    }
    Ok(out)
}

/// Held-out evaluation set: every training shape plus the unseen shape kind,
/// corrupted with Gaussian noise at each evaluation level from seeds disjoint
/// from the training ones.
pub fn build_heldout(cfg: &RunConfig) -> Result<Vec<EvalCase>> {
    let mut shapes: Vec<(ShapeKind, usize, u64)> = cfg
        .data
        .shapes
        .iter()
        .enumerate()
        .map(|(si, s)| (s.kind, s.points, shape_seed(cfg.seed, si)))
        .collect();
    if let Some(kind) = cfg.eval.holdout_shape {
        let points = cfg.data.shapes[0].points;
        let idx = cfg.data.shapes.len();
        shapes.push((kind, points, shape_seed(cfg.seed, idx)));
    }
    let mut out = Vec::new();
    for (si, &(kind, points, sseed)) in shapes.iter().enumerate() {
        let (clean, mesh) = make_shape(kind, points, sseed)?;
        let clean = clean.with_ref(clean_name(kind));
        for (ni, &scale) in cfg.eval.noise_scales.iter().enumerate() {
            let model = NoiseModel::new(NoiseKind::Gaussian, scale, noise_seed(cfg.seed, HELDOUT_NOISE_BRANCH, si, ni, 0))?;
            let noisy = add_noise(&clean, &model)?;
            out.push(EvalCase {
                shape: kind,
                noise: NoiseSpec {
                    kind: NoiseKind::Gaussian,
                    scale,
                },
                clean: clean.clone(),
                mesh: mesh.clone(),
                noisy,
            });
        }
    }
    Ok(out)
}

fn clean_name(kind: ShapeKind) -> String {
    format!("{}_clean.ply", kind.name())
}

fn noise_tag(noise: &NoiseSpec) -> String {
    format!("{}_{}", noise.kind.name(), format!("{:?}", noise.scale).replace('.', "p"))
}

/// Index of a generated dataset; paths are relative to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub shape: ShapeKind,
    pub points: usize,
    pub noise_kind: NoiseKind,
    pub noise_scale: f64,
    pub mesh: String,
    pub clean: String,
    pub variants: Vec<String>,
    pub variant_seeds: Vec<u64>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes meshes, clean clouds, noisy variants and the manifest into `dir`.
pub fn write_dataset(dir: &Path, seed: u64, entries: &[TrainingEntry]) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest { seed, entries: Vec::new() };
    for e in entries {
        let mesh_name = format!("{}_mesh.off", e.shape.name());
        let clean = clean_name(e.shape);
        write_off(&dir.join(&mesh_name), &e.mesh)?;
        write_cloud(&dir.join(&clean), &e.clean)?;
        let tag = noise_tag(&e.noise);
        let mut variants = Vec::new();
        let mut variant_seeds = Vec::new();
        for (v, cloud) in e.variants.iter().enumerate() {
            let name = format!("{}_{}_v{}.ply", e.shape.name(), tag, v);
            write_cloud(&dir.join(&name), cloud)?;
            variants.push(name);
            variant_seeds.push(cloud.noise_meta.as_ref().map(|m| m.seed).unwrap_or(0));
        }
        manifest.entries.push(ManifestEntry {
            shape: e.shape,
            points: e.clean.len(),
            noise_kind: e.noise.kind,
            noise_scale: e.noise.scale,
            mesh: mesh_name,
            clean,
            variants,
            variant_seeds,
        });
    }
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path: PathBuf = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line(),
        msg: e.to_string(),
    })
}

/// Loads a dataset written by [`write_dataset`].
pub fn read_dataset(dir: &Path) -> Result<(Manifest, Vec<TrainingEntry>)> {
    let manifest = read_manifest(dir)?;
    let mut entries = Vec::new();
    for m in &manifest.entries {
        let mesh = read_off(&dir.join(&m.mesh))?;
        let clean = read_cloud(&dir.join(&m.clean))?.with_ref(m.clean.clone());
        let variants = m.variants.iter().map(|v| read_cloud(&dir.join(v))).collect::<Result<Vec<_>>>()?;
        if variants.len() < 2 {
            return Err(Error::Config(format!("{} has fewer than two noisy variants", m.clean)));
        }
        entries.push(TrainingEntry {
            shape: m.shape,
            noise: NoiseSpec {
                kind: m.noise_kind,
                scale: m.noise_scale,
            },
            clean,
            mesh,
            variants,
        });
    }
    Ok((manifest, entries))
}
