//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain Rust function so the logic
//! can be tested natively.

use nalgebra::Matrix3;
use simpc::geometry::{add_noise, make_shape, NoiseKind, NoiseModel, PointCloud, ShapeKind, Vec3};
use simpc::metrics::{chamfer, point_to_mesh};
use simpc::theory::{projection, taylor_case3, LinearDenoiser, Manifold};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn flat(points: &[Vec3]) -> Vec<f64> {
    points.iter().flat_map(|p| p.iter().copied()).collect()
}

/// Clean and noisy samples of one synthetic shape with their distances.
#[wasm_bindgen]
pub struct ShapeSample {
    clean: Vec<f64>,
    noisy: Vec<f64>,
    cd: f64,
    p2m: f64,
}

#[wasm_bindgen]
impl ShapeSample {
    pub fn clean(&self) -> Vec<f64> {
        self.clean.clone()
    }
    pub fn noisy(&self) -> Vec<f64> {
        self.noisy.clone()
    }
    pub fn cd(&self) -> f64 {
        self.cd
    }
    pub fn p2m(&self) -> f64 {
        self.p2m
    }
}

pub fn shape_sample_impl(shape: &str, points: u32, noise: &str, scale: f64, seed: u32) -> Result<ShapeSample, String> {
    let kind: ShapeKind = shape.parse().map_err(err)?;
    let noise: NoiseKind = noise.parse().map_err(err)?;
    let (clean, mesh) = make_shape(kind, points as usize, seed as u64).map_err(err)?;
    let model = NoiseModel::new(noise, scale, seed as u64 + 1).map_err(err)?;
    let noisy = add_noise(&clean, &model).map_err(err)?;
    Ok(ShapeSample {
        cd: chamfer(&noisy, &clean).map_err(err)?,
        p2m: point_to_mesh(&noisy, &mesh).map_err(err)?,
        clean: clean.flat(),
        noisy: noisy.flat(),
    })
}

/// Samples `shape` (`sphere`, `torus`, `cube_surface`) and corrupts it.
#[wasm_bindgen]
pub fn shape_sample(shape: &str, points: u32, noise: &str, scale: f64, seed: u32) -> Result<ShapeSample, JsError> {
    shape_sample_impl(shape, points, noise, scale, seed).map_err(|e| JsError::new(&e))
}

/// Seed, denoised seed and mirror point for an idealized denoiser that moves
/// each point a fraction `strength` of the way to the true surface.
#[wasm_bindgen]
pub struct MirrorSample {
    seed: Vec<f64>,
    denoised: Vec<f64>,
    mirror: Vec<f64>,
    mean_mirror_offset: f64,
    cd_denoised: f64,
}

#[wasm_bindgen]
impl MirrorSample {
    pub fn seed(&self) -> Vec<f64> {
        self.seed.clone()
    }
    pub fn denoised(&self) -> Vec<f64> {
        self.denoised.clone()
    }
    pub fn mirror(&self) -> Vec<f64> {
        self.mirror.clone()
    }
    /// Mean signed distance of the mirror points to the surface, relative
    /// to the mean signed distance of the seeds (−1 is a perfect reflection).
    pub fn mean_mirror_offset(&self) -> f64 {
        self.mean_mirror_offset
    }
    pub fn cd_denoised(&self) -> f64 {
        self.cd_denoised
    }
}

pub fn mirror_sample_impl(shape: &str, points: u32, scale: f64, strength: f64, w2: f64, seed: u32) -> Result<MirrorSample, String> {
    let kind: ShapeKind = shape.parse().map_err(err)?;
    let manifold = Manifold::for_shape(kind).ok_or("mirror demo supports sphere and torus")?;
    let (clean, _) = make_shape(kind, points as usize, seed as u64).map_err(err)?;
    let noisy = add_noise(&clean, &NoiseModel::gaussian(scale, seed as u64 + 1)).map_err(err)?;
    let mut denoised = Vec::new();
    let mut mirror = Vec::new();
    let (mut seed_dist, mut mirror_dist) = (0.0, 0.0);
    for &x in &noisy.points {
        let g = projection(x, &manifold).map_err(err)?.g;
        let d = [strength * (g[0] - x[0]), strength * (g[1] - x[1]), strength * (g[2] - x[2])];
        let xh = [x[0] + d[0], x[1] + d[1], x[2] + d[2]];
        let xt = [x[0] + w2 * d[0], x[1] + w2 * d[1], x[2] + w2 * d[2]];
        seed_dist += manifold.signed_distance(x);
        mirror_dist += manifold.signed_distance(xt);
        denoised.push(xh);
        mirror.push(xt);
    }
    let cd_denoised = chamfer(&PointCloud::new(denoised.clone()).map_err(err)?, &clean).map_err(err)?;
    Ok(MirrorSample {
        seed: noisy.flat(),
        denoised: flat(&denoised),
        mirror: flat(&mirror),
        mean_mirror_offset: if seed_dist == 0.0 { 0.0 } else { mirror_dist / seed_dist },
        cd_denoised,
    })
}

#[wasm_bindgen]
pub fn mirror_sample(shape: &str, points: u32, scale: f64, strength: f64, w2: f64, seed: u32) -> Result<MirrorSample, JsError> {
    mirror_sample_impl(shape, points, scale, strength, w2, seed).map_err(|e| JsError::new(&e))
}

pub fn consistency_residual_impl(jacobian_scale: f64, noise_std: f64, delta: f64, samples: u32, seed: u32) -> Result<String, String> {
    let den = LinearDenoiser::new(Matrix3::identity() * jacobian_scale, [0.0; 3]).map_err(err)?;
    let r = taylor_case3(&den, noise_std, [delta, 0.0, 0.0], samples as usize, seed as u64).map_err(err)?;
    Ok(serde_json::json!({
        "empirical": r.empirical,
        "analytic": r.analytic,
        "rel_error": r.rel_error,
    })
    .to_string())
}

/// Monte-Carlo consistency loss of a linear denoiser `J = jacobian_scale·I`
/// under a mirror that misses the reflection by `delta` along x. Returns
/// JSON `{empirical, analytic, rel_error}`.
#[wasm_bindgen]
pub fn consistency_residual(jacobian_scale: f64, noise_std: f64, delta: f64, samples: u32, seed: u32) -> Result<String, JsError> {
    consistency_residual_impl(jacobian_scale, noise_std, delta, samples, seed).map_err(|e| JsError::new(&e))
}
