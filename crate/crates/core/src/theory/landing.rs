use nalgebra::{DMatrix, Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{cross, dot, norm_sq, Vec3};
use crate::rng::{derive_seed, stream, stream_rng};

/// Samples are drawn in chunks of this size, each from its own stream, so
/// results do not depend on the thread count.
pub(crate) const CHUNK: usize = 1 << 14;

const FRAME_TOL: f64 = 1e-12;

/// Anisotropic Gaussian landing distribution of a denoised point:
/// `N(mu, T Σ∥ Tᵀ + σ⊥² n nᵀ)` with `T` the tangent frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LandingModel {
    pub mu: Vec3,
    pub sigma_tangential: [[f64; 2]; 2],
    /// Standard deviation along `normal`.
    pub sigma_normal: f64,
    pub normal: Vec3,
    pub tangent_frame: [Vec3; 2],
}

impl LandingModel {
    pub fn new(mu: Vec3, sigma_tangential: [[f64; 2]; 2], sigma_normal: f64, normal: Vec3, tangent_frame: [Vec3; 2]) -> Result<Self> {
        let m = LandingModel {
            mu,
            sigma_tangential,
            sigma_normal,
            normal,
            tangent_frame,
        };
        m.validate()?;
        Ok(m)
    }

    /// Frame and tangent basis built from a normal direction.
    pub fn frame_from_normal(normal: Vec3) -> Result<(Vec3, [Vec3; 2])> {
        let len = norm_sq(normal).sqrt();
        if !(len > 0.0) {
            return Err(Error::param("normal must be non-zero"));
        }
        let n = [normal[0] / len, normal[1] / len, normal[2] / len];
        let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let t1 = cross(n, helper);
        let l1 = norm_sq(t1).sqrt();
        let t1 = [t1[0] / l1, t1[1] / l1, t1[2] / l1];
        let t2 = cross(n, t1);
        Ok((n, [t1, t2]))
    }

    pub fn validate(&self) -> Result<()> {
        let [t1, t2] = self.tangent_frame;
        let n = self.normal;
        let checks = [
            (dot(n, n), 1.0),
            (dot(t1, t1), 1.0),
            (dot(t2, t2), 1.0),
            (dot(n, t1), 0.0),
            (dot(n, t2), 0.0),
            (dot(t1, t2), 0.0),
        ];
        if checks.iter().any(|(v, want)| (v - want).abs() > FRAME_TOL) {
            return Err(Error::param("landing frame is not orthonormal"));
        }
        let s = self.sigma_tangential;
        if (s[0][1] - s[1][0]).abs() > FRAME_TOL * (1.0 + s[0][1].abs()) {
            return Err(Error::param("tangential covariance is not symmetric"));
        }
        let tr = s[0][0] + s[1][1];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let tol = FRAME_TOL * (1.0 + tr.abs());
        if s[0][0] < -tol || s[1][1] < -tol || det < -tol * (1.0 + tr.abs()) {
            return Err(Error::param("tangential covariance is not positive semi-definite"));
        }
        if !(self.sigma_normal >= 0.0) {
            return Err(Error::param("normal standard deviation must be non-negative"));
        }
        Ok(())
    }

    /// Full 3×3 covariance.
    pub fn covariance(&self) -> Matrix3<f64> {
        let t1 = Vector3::from(self.tangent_frame[0]);
        let t2 = Vector3::from(self.tangent_frame[1]);
        let n = Vector3::from(self.normal);
        let s = self.sigma_tangential;
        t1 * t1.transpose() * s[0][0]
            + (t1 * t2.transpose() + t2 * t1.transpose()) * s[0][1]
            + t2 * t2.transpose() * s[1][1]
            + n * n.transpose() * (self.sigma_normal * self.sigma_normal)
    }
}

/// Square root factor `L` with `L Lᵀ = cov`; rejects matrices with an
/// eigenvalue below `−tol · max(1, ‖cov‖)`.
fn psd_factor_dyn(cov: DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let scale = cov.abs().max().max(1.0);
    let eig = SymmetricEigen::new(cov);
    if eig.eigenvalues.iter().any(|&l| l < -tol * scale) {
        return Err(Error::param("covariance is not positive semi-definite"));
    }
    let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt))
}

fn psd3(cov: Matrix3<f64>, tol: f64) -> Result<Matrix3<f64>> {
    let l = psd_factor_dyn(DMatrix::from_column_slice(3, 3, cov.as_slice()), tol)?;
    Ok(Matrix3::from_column_slice(l.as_slice()))
}

fn psd6(cov: Matrix6<f64>, tol: f64) -> Result<Matrix6<f64>> {
    let l = psd_factor_dyn(DMatrix::from_column_slice(6, 6, cov.as_slice()), tol)?;
    Ok(Matrix6::from_column_slice(l.as_slice()))
}

fn normal3(rng: &mut impl Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.sample(StandardNormal))
}

/// `count` draws from the landing distribution.
pub fn sample_landing(model: &LandingModel, count: usize, seed: u64) -> Result<Vec<Vec3>> {
    if count == 0 {
        return Err(Error::param("sample count must be >= 1"));
    }
    model.validate()?;
    let l = psd3(model.covariance(), 1e-12)?;
    let mu = Vector3::from(model.mu);
    let chunks: Vec<Vec<Vec3>> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(derive_seed(seed, c as u64), stream::THEORY);
            let n = CHUNK.min(count - c * CHUNK);
            (0..n)
                .map(|_| {
                    let x = mu + l * normal3(&mut rng);
                    [x[0], x[1], x[2]]
                })
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Outcome of comparing a Monte-Carlo mean with its closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentCheck {
    pub empirical: f64,
    pub analytic: f64,
    pub rel_error: f64,
    /// Standard error of the empirical mean.
    pub std_error: f64,
}

pub(crate) fn rel_error(empirical: f64, analytic: f64) -> f64 {
    if analytic == 0.0 {
        empirical.abs()
    } else {
        (empirical - analytic).abs() / analytic.abs()
    }
}

/// Sequential mean and standard error of chunked samples.
pub(crate) fn mean_and_se<F>(count: usize, seed: u64, draw: F) -> (f64, f64)
where
    F: Fn(&mut crate::rng::Rng) -> f64 + Sync,
{
    let partial: Vec<(f64, f64)> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(derive_seed(seed, c as u64), stream::THEORY);
            let n = CHUNK.min(count - c * CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..n {
                let v = draw(&mut rng);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = count as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Draws correlated `(x̂, x̄)` pairs from the joint Gaussian with the two
/// landing covariances on the diagonal and `cross_cov = Cov(x̂, x̄)` off it,
/// and compares `E‖x̂ − x̄‖²` with `‖μ̂ − μ̄‖² + Tr(Σ̂ + Σ̄ − 2Σ×)`.
pub fn second_moment_check(
    hat: &LandingModel,
    bar: &LandingModel,
    cross_cov: &Matrix3<f64>,
    count: usize,
    seed: u64,
) -> Result<MomentCheck> {
    if count == 0 {
        return Err(Error::param("sample count must be >= 1"));
    }
    hat.validate()?;
    bar.validate()?;
    let sh = hat.covariance();
    let sb = bar.covariance();
    let mut joint = Matrix6::<f64>::zeros();
    joint.fixed_view_mut::<3, 3>(0, 0).copy_from(&sh);
    joint.fixed_view_mut::<3, 3>(3, 3).copy_from(&sb);
    joint.fixed_view_mut::<3, 3>(0, 3).copy_from(cross_cov);
    joint.fixed_view_mut::<3, 3>(3, 0).copy_from(&cross_cov.transpose());
    let l = psd6(joint, 1e-10).map_err(|_| Error::param("joint covariance of the two landings is not positive semi-definite"))?;
    let mu_h = Vector3::from(hat.mu);
    let mu_b = Vector3::from(bar.mu);
    let (empirical, std_error) = mean_and_se(count, seed, |rng| {
        let z = Vector6::from_fn(|_, _| rng.sample(StandardNormal));
        let y = l * z;
        let xh = mu_h + y.fixed_rows::<3>(0);
        let xb = mu_b + y.fixed_rows::<3>(3);
        (xh - xb).norm_squared()
    });
    let analytic = (mu_h - mu_b).norm_squared() + (sh + sb - cross_cov * 2.0).trace();
    Ok(MomentCheck {
        empirical,
        analytic,
        rel_error: rel_error(empirical, analytic),
        std_error,
    })
}

/// Random landing pair with a cross-covariance that keeps the joint PSD:
/// `Σ× = ρ · Σ̂^{1/2} R Σ̄^{1/2}` with `R` a rotation and `|ρ| < 1`.
pub fn random_landing_pair(seed: u64) -> (LandingModel, LandingModel, Matrix3<f64>) {
    let mut rng = stream_rng(seed, stream::THEORY);
    let model = |rng: &mut crate::rng::Rng| {
        let nv = normal3(rng);
        let (n, frame) = LandingModel::frame_from_normal([nv[0], nv[1], nv[2]]).expect("non-zero normal");
        let a: [[f64; 2]; 2] = [
            [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)],
            [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)],
        ];
        let s00 = a[0][0] * a[0][0] + a[0][1] * a[0][1];
        let s01 = a[0][0] * a[1][0] + a[0][1] * a[1][1];
        let s11 = a[1][0] * a[1][0] + a[1][1] * a[1][1];
        let mu = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        LandingModel::new(mu, [[s00, s01], [s01, s11]], rng.gen_range(0.0..0.1), n, frame).expect("valid by construction")
    };
    let hat = model(&mut rng);
    let bar = model(&mut rng);
    let rho: f64 = rng.gen_range(-0.95..0.95);
    let axis = normal3(&mut rng).normalize();
    let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), rng.gen_range(0.0..std::f64::consts::TAU));
    let rh = psd3(hat.covariance(), 1e-12).expect("psd");
    let rb = psd3(bar.covariance(), 1e-12).expect("psd");
    let cross = rh * rot.matrix() * rb.transpose() * rho;
    (hat, bar, cross)
}
