use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use super::landing::{mean_and_se, rel_error, MomentCheck};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// `x ↦ s + J (x − s)`: a denoiser whose first-order expansion around the
/// surface point `s` is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDenoiser {
    pub j: Matrix3<f64>,
    pub anchor: Vec3,
}

impl LinearDenoiser {
    pub fn new(j: Matrix3<f64>, anchor: Vec3) -> Result<Self> {
        if j.iter().chain(anchor.iter()).any(|v| !v.is_finite()) {
            return Err(Error::param("linear denoiser must be finite"));
        }
        Ok(LinearDenoiser { j, anchor })
    }

    pub fn apply(&self, x: Vec3) -> Vec3 {
        let s = Vector3::from(self.anchor);
        let y = s + self.j * (Vector3::from(x) - s);
        [y[0], y[1], y[2]]
    }

    /// Displacement `d = D(x) − x`.
    pub fn displacement(&self, x: Vec3) -> Vec3 {
        let y = self.apply(x);
        [y[0] - x[0], y[1] - x[1], y[2] - x[2]]
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.j.norm_squared()
    }
}

fn noise(rng: &mut crate::rng::Rng, std: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| std * rng.sample::<f64, _>(StandardNormal))
}

/// Symmetric mirror: `x = s + n`, `x̃ = s − n`. Compares `E‖x̂ − x̄‖²` with
/// `4 σ² ‖J‖²_F`.
pub fn taylor_case1(den: &LinearDenoiser, noise_std: f64, count: usize, seed: u64) -> Result<MomentCheck> {
    taylor_case3(den, noise_std, [0.0; 3], count, seed)
}

/// Two noisy points with different surface targets `s1`, `s2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasReport {
    pub empirical: f64,
    /// `‖s1 − s2‖²`.
    pub bias_floor: f64,
    /// `2 σ² ‖J‖²_F`.
    pub noise_term: f64,
    pub analytic: f64,
    pub rel_error: f64,
    /// Relative gap between the empirical value and the bias floor alone.
    pub floor_rel_error: f64,
    pub std_error: f64,
}

/// `x⁽ᵏ⁾ = sₖ + nₖ` with independent noise; the denoiser is applied around
/// each target with the same Jacobian.
pub fn taylor_case2(den: &LinearDenoiser, s1: Vec3, s2: Vec3, noise_std: f64, count: usize, seed: u64) -> Result<BiasReport> {
    if count == 0 {
        return Err(Error::param("sample count must be >= 1"));
    }
    let (a, b) = (Vector3::from(s1), Vector3::from(s2));
    let j = den.j;
    let (empirical, std_error) = mean_and_se(count, seed, |rng| {
        let n1 = noise(rng, noise_std);
        let n2 = noise(rng, noise_std);
        let x1 = a + j * n1;
        let x2 = b + j * n2;
        (x1 - x2).norm_squared()
    });
    let bias_floor = (a - b).norm_squared();
    let noise_term = 2.0 * noise_std * noise_std * den.frobenius_sq();
    let analytic = bias_floor + noise_term;
    Ok(BiasReport {
        empirical,
        bias_floor,
        noise_term,
        analytic,
        rel_error: rel_error(empirical, analytic),
        floor_rel_error: rel_error(empirical, bias_floor),
        std_error,
    })
}

/// Asymmetric mirror `ñ = −n + δ`: `x̂ − x̄ = 2Jn − Jδ`, so
/// `E‖x̂ − x̄‖² = 4 σ² ‖J‖²_F + ‖Jδ‖²`.
pub fn taylor_case3(den: &LinearDenoiser, noise_std: f64, delta: Vec3, count: usize, seed: u64) -> Result<MomentCheck> {
    if count == 0 {
        return Err(Error::param("sample count must be >= 1"));
    }
    if !(noise_std >= 0.0) {
        return Err(Error::param("noise_std must be non-negative"));
    }
    let s = den.anchor;
    let dv = Vector3::from(delta);
    let (empirical, std_error) = mean_and_se(count, seed, |rng| {
        let n = noise(rng, noise_std);
        let x = [s[0] + n[0], s[1] + n[1], s[2] + n[2]];
        let mirror_noise = -n + dv;
        let xt = [s[0] + mirror_noise[0], s[1] + mirror_noise[1], s[2] + mirror_noise[2]];
        let xh = Vector3::from(den.apply(x));
        let xb = Vector3::from(den.apply(xt));
        (xh - xb).norm_squared()
    });
    let analytic = 4.0 * noise_std * noise_std * den.frobenius_sq() + (den.j * dv).norm_squared();
    Ok(MomentCheck {
        empirical,
        analytic,
        rel_error: rel_error(empirical, analytic),
        std_error,
    })
}
