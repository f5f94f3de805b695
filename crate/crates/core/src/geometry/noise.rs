use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sphere::bounding_sphere_of;
use super::{NoiseMeta, PointCloud};
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Laplacian,
    Uniform,
    Discrete,
    Anisotropic,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::Gaussian,
        NoiseKind::Laplacian,
        NoiseKind::Uniform,
        NoiseKind::Discrete,
        NoiseKind::Anisotropic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Laplacian => "laplacian",
            NoiseKind::Uniform => "uniform",
            NoiseKind::Discrete => "discrete",
            NoiseKind::Anisotropic => "anisotropic",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown noise kind '{s}'")))
    }
}

/// Noise distribution; `scale` is a fraction of the bounding-sphere radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub scale: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, scale: f64, seed: u64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::param(format!("noise scale must be non-negative, got {scale}")));
        }
        Ok(NoiseModel { kind, scale, seed })
    }

    pub fn gaussian(scale: f64, seed: u64) -> Self {
        NoiseModel {
            kind: NoiseKind::Gaussian,
            scale,
            seed,
        }
    }
}

/// Tolerance on the bounding radius for a cloud to count as normalized.
/// Samples of a unit-normalized shape may sit strictly inside the sphere.
const NORMALIZED_MAX: f64 = 1.0 + 1e-6;
const NORMALIZED_MIN: f64 = 0.5;

/// Corrupts a normalized cloud. Identical `(cloud, model)` gives identical output.
pub fn add_noise(cloud: &PointCloud, model: &NoiseModel) -> Result<PointCloud> {
    if !(model.scale >= 0.0) || !model.scale.is_finite() {
        return Err(Error::param("noise scale must be finite and non-negative"));
    }
    let (_, r) = bounding_sphere_of(&cloud.points)?;
    if !(NORMALIZED_MIN..=NORMALIZED_MAX).contains(&r) {
        return Err(Error::param(format!(
            "add_noise expects a unit-normalized cloud, bounding radius is {r}"
        )));
    }
    let s = model.scale;
    let mut rng = stream_rng(model.seed, stream::NOISE);
    let mut out = cloud.clone();
    match model.kind {
        NoiseKind::Gaussian => {
            for p in &mut out.points {
                for c in p.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *c += s * z;
                }
            }
        }
        NoiseKind::Laplacian => {
            for p in &mut out.points {
                for c in p.iter_mut() {
                    // Inverse CDF on (-1/2, 1/2).
                    let u: f64 = rng.gen::<f64>() - 0.5;
                    *c += -s * u.signum() * (1.0 - 2.0 * u.abs()).ln();
                }
            }
        }
        NoiseKind::Uniform => {
            let half = s * 3f64.sqrt();
            for p in &mut out.points {
                for c in p.iter_mut() {
                    *c += half * (2.0 * rng.gen::<f64>() - 1.0);
                }
            }
        }
        NoiseKind::Discrete => {
            for p in &mut out.points {
                let choice = rng.gen_range(0..7usize);
                if choice < 6 {
                    let axis = choice / 2;
                    let sign = if choice % 2 == 0 { 1.0 } else { -1.0 };
                    p[axis] += sign * s;
                }
            }
        }
        NoiseKind::Anisotropic => {
            let std: [f64; 3] = std::array::from_fn(|_| s * rng.gen_range(0.25..=1.0f64).sqrt());
            for p in &mut out.points {
                for (c, sd) in p.iter_mut().zip(std) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *c += sd * z;
                }
            }
        }
    }
    out.noise_meta = Some(NoiseMeta {
        kind: model.kind,
        scale: s,
        seed: model.seed,
    });
    Ok(out)
}
