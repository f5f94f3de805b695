//! Monte-Carlo checks of the consistency analysis: the anisotropic landing
//! model, the second-moment expansion of the consistency loss, the
//! linear-denoiser expansions and closed-form surface projections.

mod bridge;
mod landing;
mod projection;
mod taylor;

pub use bridge::{mirror_bridge, BridgeReport};
pub use landing::{random_landing_pair, sample_landing, second_moment_check, LandingModel, MomentCheck};
pub use projection::{projection, tangential_residual, Manifold, SurfaceTarget};
pub use taylor::{taylor_case1, taylor_case2, taylor_case3, BiasReport, LinearDenoiser};

use nalgebra::Matrix3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pipeline::TheoryConfig;
use crate::rng::{derive_seed, stream, stream_rng};

/// One line of the theory report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub samples: usize,
    pub empirical: f64,
    pub analytic: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// `(empirical − analytic) / standard error`, when a standard error exists.
    pub z_score: Option<f64>,
}

impl CheckRecord {
    fn new(check: impl Into<String>, samples: usize, empirical: f64, analytic: f64, rel_error: f64, tolerance: f64) -> Self {
        CheckRecord {
            check: check.into(),
            samples,
            empirical,
            analytic,
            rel_error,
            tolerance,
            pass: rel_error <= tolerance,
            z_score: None,
        }
    }

    fn from_moment(check: impl Into<String>, samples: usize, m: &MomentCheck, tolerance: f64) -> Self {
        let mut r = CheckRecord::new(check, samples, m.empirical, m.analytic, m.rel_error, tolerance);
        if m.std_error > 0.0 {
            r.z_score = Some((m.empirical - m.analytic) / m.std_error);
        }
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub seed: u64,
    pub records: Vec<CheckRecord>,
    pub all_pass: bool,
}

fn random_matrix(rng: &mut crate::rng::Rng) -> Matrix3<f64> {
    Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0))
}

fn random_vec(rng: &mut crate::rng::Rng, r: f64) -> [f64; 3] {
    [rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r)]
}

/// Landing mean and normal variance against their targets.
fn landing_checks(cfg: &TheoryConfig, seed: u64) -> Result<Vec<CheckRecord>> {
    let n = cfg.landing_samples;
    let (normal, frame) = LandingModel::frame_from_normal([0.3, -0.5, 0.8])?;
    let model = LandingModel::new([0.1, -0.2, 0.3], [[0.004, 0.001], [0.001, 0.002]], 0.03, normal, frame)?;
    let samples = sample_landing(&model, n, seed)?;
    let cov = model.covariance();
    let m = n as f64;
    let mut mean = [0.0; 3];
    for s in &samples {
        for c in 0..3 {
            mean[c] += s[c] / m;
        }
    }
    // Worst axis, in units of the standard error of the mean.
    let mut z_max = 0.0f64;
    for c in 0..3 {
        let se = (cov[(c, c)] / m).sqrt();
        z_max = z_max.max((mean[c] - model.mu[c]).abs() / se);
    }
    let mut mean_rec = CheckRecord::new("landing_mean", n, z_max, 0.0, z_max, 4.0);
    mean_rec.z_score = Some(z_max);

    let var_n: f64 = samples
        .iter()
        .map(|s| {
            let p = (s[0] - model.mu[0]) * normal[0] + (s[1] - model.mu[1]) * normal[1] + (s[2] - model.mu[2]) * normal[2];
            p * p
        })
        .sum::<f64>()
        / m;
    let target = model.sigma_normal * model.sigma_normal;
    let mut var_rec = CheckRecord::new("landing_normal_variance", n, var_n, target, (var_n - target).abs() / target, 0.02);
    var_rec.z_score = Some((var_n - target) / (target * (2.0 / m).sqrt()));
    Ok(vec![mean_rec, var_rec])
}

/// Runs every check with the configured sample counts.
pub fn run_theory(cfg: &TheoryConfig, seed: u64) -> Result<TheoryReport> {
    let mut records = landing_checks(cfg, derive_seed(seed, 0))?;

    for i in 0..cfg.moment_instances {
        let inst = derive_seed(seed, 100 + i as u64);
        let (hat, bar, cross) = random_landing_pair(inst);
        let m = second_moment_check(&hat, &bar, &cross, cfg.moment_samples, derive_seed(inst, 1))?;
        records.push(CheckRecord::from_moment(
            format!("second_moment[{i}]"),
            cfg.moment_samples,
            &m,
            0.02,
        ));
    }

    let mut rng = stream_rng(derive_seed(seed, 1), stream::THEORY);
    let n = cfg.taylor_samples;
    let den = LinearDenoiser::new(random_matrix(&mut rng), random_vec(&mut rng, 1.0))?;
    let c1 = taylor_case1(&den, 0.05, n, derive_seed(seed, 2))?;
    records.push(CheckRecord::from_moment("taylor_case1", n, &c1, 0.05));

    let small = LinearDenoiser::new(random_matrix(&mut rng) * 0.01, [0.0; 3])?;
    let s1 = random_vec(&mut rng, 0.5);
    let s2 = random_vec(&mut rng, 0.5);
    let c2 = taylor_case2(&small, s1, s2, 0.05, n, derive_seed(seed, 3))?;
    let mut r2 = CheckRecord::new("taylor_case2_bias_floor", n, c2.empirical, c2.bias_floor, c2.floor_rel_error, 0.02);
    r2.z_score = Some((c2.empirical - c2.analytic) / c2.std_error.max(f64::MIN_POSITIVE));
    records.push(r2);

    let delta = random_vec(&mut rng, 0.05);
    let c3 = taylor_case3(&den, 0.05, delta, n, derive_seed(seed, 4))?;
    records.push(CheckRecord::from_moment("taylor_case3", n, &c3, 0.05));

    // Residual must grow with the asymmetry.
    let sweep: Vec<MomentCheck> = [0.0, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&t| {
            let d = [delta[0] * t, delta[1] * t, delta[2] * t];
            taylor_case3(&den, 0.05, d, n, derive_seed(seed, 5))
        })
        .collect::<Result<_>>()?;
    let monotone = sweep.windows(2).all(|w| w[1].empirical > w[0].empirical);
    let last = sweep.last().unwrap();
    let mut rs = CheckRecord::new(
        "taylor_case3_delta_sweep",
        n * sweep.len(),
        last.empirical,
        last.analytic,
        last.rel_error,
        0.05,
    );
    rs.pass &= monotone;
    records.push(rs);

    for (name, manifold) in [
        ("projection_orthogonality_sphere", Manifold::unit_sphere()),
        ("projection_orthogonality_torus", Manifold::Torus { major: 1.0, minor: 0.4 }),
    ] {
        let mut worst = 0.0f64;
        let mut worst_on = 0.0f64;
        for _ in 0..cfg.projection_points {
            let x = random_vec(&mut rng, 2.0);
            worst = worst.max(tangential_residual(x, &manifold)?);
            worst_on = worst_on.max(manifold.residual(projection(x, &manifold)?.g).abs());
        }
        let err = worst.max(worst_on);
        records.push(CheckRecord::new(name, cfg.projection_points, err, 0.0, err, 1e-9));
    }

    let all_pass = records.iter().all(|r| r.pass);
    Ok(TheoryReport { seed, records, all_pass })
}
