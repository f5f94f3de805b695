//! Denoises the synthetic shapes by exact surface projection and prints the
//! CD and P2M ratios against the noisy input. Projection removes only the
//! normal component of the noise, so the CD ratio is a floor for any
//! displacement denoiser that keeps the sampling pattern.
//!
//! `cargo run --release --example projection_oracle`

use simpc::geometry::{add_noise, make_shape, NoiseModel, PointCloud, ShapeKind};
use simpc::metrics::{chamfer, point_to_mesh};
use simpc::theory::{projection, Manifold};

fn main() -> simpc::Result<()> {
    println!("shape,noise_scale,cd_ratio,p2m_ratio");
    for kind in [ShapeKind::Sphere, ShapeKind::Torus] {
        let (clean, mesh) = make_shape(kind, 2048, 1)?;
        let manifold = Manifold::for_shape(kind).expect("analytic surface");
        for scale in [0.01, 0.02, 0.03] {
            let noisy = add_noise(&clean, &NoiseModel::gaussian(scale, 5))?;
            let projected = noisy
                .points
                .iter()
                .map(|&p| projection(p, &manifold).map(|t| t.g))
                .collect::<simpc::Result<Vec<_>>>()?;
            let projected = PointCloud::new(projected)?;
            let cd = chamfer(&projected, &clean)? / chamfer(&noisy, &clean)?;
            let p2m = point_to_mesh(&projected, &mesh)? / point_to_mesh(&noisy, &mesh)?;
            println!("{kind},{scale},{cd:.3},{p2m:.3}");
        }
    }
    Ok(())
}
