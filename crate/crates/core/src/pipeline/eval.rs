//! Denoising passes and metric reports.

use rayon::prelude::*;

use super::data::EvalCase;
use crate::error::Result;
use crate::geometry::{PointCloud, TriangleMesh};
use crate::metrics::{chamfer, point_to_mesh, MetricReport, CSV_HEADER};
use crate::network::{denoise_values, Model};

/// Runs the network `iterations` times, feeding each output back as input.
/// Returns every intermediate cloud; the last one is the result.
pub fn denoise_iterations(model: &Model, cloud: &PointCloud, iterations: usize) -> Result<Vec<PointCloud>> {
    let mut out = Vec::with_capacity(iterations);
    let mut current = cloud.clone();
    for _ in 0..iterations {
        current = denoise_values(model, &current)?;
        out.push(current.clone());
    }
    Ok(out)
}

pub fn metric_report(
    shape: &str,
    noise_kind: &str,
    noise_scale: f64,
    cloud: &PointCloud,
    clean: &PointCloud,
    mesh: Option<&TriangleMesh>,
) -> Result<MetricReport> {
    Ok(MetricReport {
        shape: shape.to_string(),
        noise_kind: noise_kind.to_string(),
        noise_scale,
        cd: chamfer(cloud, clean)?,
        p2m: mesh.map(|m| point_to_mesh(cloud, m)).transpose()?,
    })
}

/// Scores of one held-out case before and after denoising.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub noisy: MetricReport,
    pub denoised: MetricReport,
}

pub fn evaluate_case(model: &Model, case: &EvalCase, iterations: usize) -> Result<EvalRow> {
    let shape = case.shape.name();
    let kind = case.noise.kind.name();
    let out = denoise_iterations(model, &case.noisy, iterations)?;
    let noisy = metric_report(shape, kind, case.noise.scale, &case.noisy, &case.clean, Some(&case.mesh))?;
    let denoised = metric_report(shape, kind, case.noise.scale, out.last().unwrap(), &case.clean, Some(&case.mesh))?;
    Ok(EvalRow { noisy, denoised })
}

pub fn evaluate_model(model: &Model, cases: &[EvalCase], iterations: usize) -> Result<Vec<EvalRow>> {
    cases.par_iter().map(|c| evaluate_case(model, c, iterations)).collect()
}

pub const EVAL_CSV_HEADER: &str = "source,shape,noise_kind,noise_scale,cd_raw,cd_e5,p2m_raw,p2m_e5";

/// `source` is `noisy` for the reference row and `denoised` otherwise.
pub fn eval_csv(rows: &[EvalRow]) -> String {
    debug_assert!(EVAL_CSV_HEADER.ends_with(CSV_HEADER));
    let mut s = String::from(EVAL_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("noisy,{}\n", r.noisy.csv_row()));
        s.push_str(&format!("denoised,{}\n", r.denoised.csv_row()));
    }
    s
}
