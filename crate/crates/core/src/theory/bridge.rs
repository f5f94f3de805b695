use super::projection::{projection, Manifold};
use crate::autodiff::Tape;
use crate::error::Result;
use crate::geometry::{add, dist_sq, sub, PointCloud, ShapeKind, TORUS_MAJOR, TORUS_MINOR};
use crate::loss::mirror_triples;
use crate::network::{denoise_forward, Bound, MirrorConfig, Model};

impl Manifold {
    /// The surface of a normalized synthetic shape, when it has a closed-form
    /// projection.
    pub fn for_shape(kind: ShapeKind) -> Option<Manifold> {
        let r = kind.raw_bounds().radius;
        match kind {
            ShapeKind::Sphere => Some(Manifold::unit_sphere()),
            ShapeKind::Torus => Some(Manifold::Torus {
                major: TORUS_MAJOR / r,
                minor: TORUS_MINOR / r,
            }),
            ShapeKind::CubeSurface => None,
        }
    }
}

/// How closely a trained model's first-block mirror point realizes the
/// ideal reflection `2Π(x) − x`, and whether outputs end up nearer the
/// surface than the inputs. Descriptive only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BridgeReport {
    pub points: usize,
    /// Mean `‖x − Π(x)‖`.
    pub mean_noise_norm: f64,
    /// Mean `‖x̃ − (2Π(x) − x)‖`.
    pub mean_mirror_gap: f64,
    /// Mean unsigned distance of the inputs to the surface.
    pub mean_dist_input: f64,
    /// Mean unsigned distance of the final outputs to the surface.
    pub mean_dist_output: f64,
}

pub fn mirror_bridge(model: &Model, noisy: &PointCloud, manifold: &Manifold, mirror: &MirrorConfig) -> Result<BridgeReport> {
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, &model.store)?;
    let x = tape.constant(vec![noisy.len(), 3], noisy.flat())?;
    let traj = denoise_forward(&mut tape, &p, model, x, Some(mirror))?;
    let triples = mirror_triples(&tape, &traj.mirror[0]);
    let out = tape.value(traj.output());
    let n = noisy.len() as f64;
    let mut rep = BridgeReport {
        points: noisy.len(),
        mean_noise_norm: 0.0,
        mean_mirror_gap: 0.0,
        mean_dist_input: 0.0,
        mean_dist_output: 0.0,
    };
    for (i, t) in triples.iter().enumerate() {
        let g = projection(t.seed, manifold)?.g;
        let ideal = sub(add(g, g), t.seed);
        rep.mean_noise_norm += dist_sq(t.seed, g).sqrt() / n;
        rep.mean_mirror_gap += dist_sq(t.mirror_input, ideal).sqrt() / n;
        rep.mean_dist_input += manifold.signed_distance(t.seed).abs() / n;
        let y = [out[3 * i], out[3 * i + 1], out[3 * i + 2]];
        rep.mean_dist_output += manifold.signed_distance(y).abs() / n;
    }
    Ok(rep)
}
