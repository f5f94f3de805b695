use crate::error::{Error, Result};
use crate::geometry::{add, dot, norm_sq, scale, sub, Vec3};

/// Distance below which a point counts as lying on the medial axis.
const MEDIAL_TOL: f64 = 1e-12;

/// Test manifolds with closed-form nearest-point projections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Manifold {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    /// Axis `z`, centred at the origin.
    Torus {
        major: f64,
        minor: f64,
    },
}

/// Nearest point `g = Π(x)` on a [`Manifold`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceTarget {
    pub g: Vec3,
}

fn unit(v: Vec3) -> Vec3 {
    scale(v, 1.0 / norm_sq(v).sqrt())
}

impl Manifold {
    pub fn unit_sphere() -> Self {
        Manifold::Sphere {
            center: [0.0; 3],
            radius: 1.0,
        }
    }

    /// Outward unit normal at a surface point.
    pub fn normal(&self, g: Vec3) -> Vec3 {
        match *self {
            Manifold::Sphere { center, .. } => unit(sub(g, center)),
            Manifold::Torus { major, .. } => {
                let rho = (g[0] * g[0] + g[1] * g[1]).sqrt();
                let core = [major * g[0] / rho, major * g[1] / rho, 0.0];
                unit(sub(g, core))
            }
        }
    }

    /// Signed distance of `x` to the surface (negative inside).
    pub fn signed_distance(&self, x: Vec3) -> f64 {
        match *self {
            Manifold::Sphere { center, radius } => norm_sq(sub(x, center)).sqrt() - radius,
            Manifold::Torus { major, minor } => {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                ((rho - major).powi(2) + x[2] * x[2]).sqrt() - minor
            }
        }
    }

    /// Residual of the implicit surface equation, zero on the manifold.
    pub fn residual(&self, g: Vec3) -> f64 {
        self.signed_distance(g)
    }
}

/// Closed-form projection. Points on the medial axis (the sphere centre, the
/// torus axis or its core circle) have no unique nearest point.
pub fn projection(x: Vec3, manifold: &Manifold) -> Result<SurfaceTarget> {
    match *manifold {
        Manifold::Sphere { center, radius } => {
            let r = sub(x, center);
            if norm_sq(r).sqrt() < MEDIAL_TOL {
                return Err(Error::Singularity("point is at the sphere centre".into()));
            }
            Ok(SurfaceTarget {
                g: add(center, scale(unit(r), radius)),
            })
        }
        Manifold::Torus { major, minor } => {
            let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if rho < MEDIAL_TOL {
                return Err(Error::Singularity("point is on the torus axis".into()));
            }
            let core = [major * x[0] / rho, major * x[1] / rho, 0.0];
            let r = sub(x, core);
            if norm_sq(r).sqrt() < MEDIAL_TOL {
                return Err(Error::Singularity("point is on the torus core circle".into()));
            }
            Ok(SurfaceTarget {
                g: add(core, scale(unit(r), minor)),
            })
        }
    }
}

/// Largest `|(x − Π(x)) · t|` over the two tangent directions at `Π(x)`.
pub fn tangential_residual(x: Vec3, manifold: &Manifold) -> Result<f64> {
    let g = projection(x, manifold)?.g;
    let n = manifold.normal(g);
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let t1 = unit(crate::geometry::cross(n, helper));
    let t2 = crate::geometry::cross(n, t1);
    let r = sub(x, g);
    Ok(dot(r, t1).abs().max(dot(r, t2).abs()))
}
