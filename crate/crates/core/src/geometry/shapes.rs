//! Analytic test shapes with area-uniform sampling and a paired mesh.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{scale, PointCloud, TriangleMesh, Vec3};
use crate::error::{Error, Result};
use crate::geometry::Normalization;
use crate::rng::{stream, stream_rng};

pub const TORUS_MAJOR: f64 = 1.0;
pub const TORUS_MINOR: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Sphere,
    Torus,
    CubeSurface,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 3] = [ShapeKind::Sphere, ShapeKind::Torus, ShapeKind::CubeSurface];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Sphere => "sphere",
            ShapeKind::Torus => "torus",
            ShapeKind::CubeSurface => "cube_surface",
        }
    }

    /// Analytic bounding sphere of the raw (pre-normalization) shape.
    pub fn raw_bounds(self) -> Normalization {
        let radius = match self {
            ShapeKind::Sphere => 1.0,
            ShapeKind::Torus => TORUS_MAJOR + TORUS_MINOR,
            ShapeKind::CubeSurface => 3f64.sqrt(),
        };
        Normalization { center: [0.0; 3], radius }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown shape kind '{s}'")))
    }
}

fn sample_raw(kind: ShapeKind, rng: &mut crate::rng::Rng) -> Vec3 {
    match kind {
        ShapeKind::Sphere => loop {
            let v: Vec3 = std::array::from_fn(|_| StandardNormal.sample(&mut *rng));
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 1e-12 {
                return scale(v, 1.0 / n);
            }
        },
        ShapeKind::Torus => {
            let u = rng.gen_range(0.0..2.0 * PI);
            // Area element is proportional to R + r cos v.
            let v = loop {
                let v = rng.gen_range(0.0..2.0 * PI);
                let accept = (TORUS_MAJOR + TORUS_MINOR * v.cos()) / (TORUS_MAJOR + TORUS_MINOR);
                if rng.gen::<f64>() < accept {
                    break v;
                }
            };
            torus_point(u, v)
        }
        ShapeKind::CubeSurface => {
            let face = rng.gen_range(0..6usize);
            let a = rng.gen_range(-1.0..=1.0);
            let b = rng.gen_range(-1.0..=1.0);
            let s = if face % 2 == 0 { 1.0 } else { -1.0 };
            match face / 2 {
                0 => [s, a, b],
                1 => [a, s, b],
                _ => [a, b, s],
            }
        }
    }
}

pub(crate) fn torus_point(u: f64, v: f64) -> Vec3 {
    let ring = TORUS_MAJOR + TORUS_MINOR * v.cos();
    [ring * u.cos(), ring * u.sin(), TORUS_MINOR * v.sin()]
}

fn sphere_mesh(n_lat: usize, n_lon: usize) -> TriangleMesh {
    let mut vertices = vec![[0.0, 0.0, 1.0]];
    for i in 1..n_lat {
        let theta = PI * i as f64 / n_lat as f64;
        for j in 0..n_lon {
            let phi = 2.0 * PI * j as f64 / n_lon as f64;
            vertices.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    vertices.push([0.0, 0.0, -1.0]);
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * n_lon + (j % n_lon);
    let mut faces = Vec::new();
    for j in 0..n_lon {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..n_lat - 1 {
        for j in 0..n_lon {
            faces.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    for j in 0..n_lon {
        faces.push([ring(n_lat - 1, j), south, ring(n_lat - 1, j + 1)]);
    }
    TriangleMesh { vertices, faces }
}

fn torus_mesh(n_u: usize, n_v: usize) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(n_u * n_v);
    for i in 0..n_u {
        for j in 0..n_v {
            vertices.push(torus_point(2.0 * PI * i as f64 / n_u as f64, 2.0 * PI * j as f64 / n_v as f64));
        }
    }
    let id = |i: usize, j: usize| (i % n_u) * n_v + (j % n_v);
    let mut faces = Vec::new();
    for i in 0..n_u {
        for j in 0..n_v {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh { vertices, faces }
}

fn cube_mesh() -> TriangleMesh {
    let mut vertices = Vec::new();
    for i in 0..8 {
        vertices.push([
            if i & 1 == 0 { -1.0 } else { 1.0 },
            if i & 2 == 0 { -1.0 } else { 1.0 },
            if i & 4 == 0 { -1.0 } else { 1.0 },
        ]);
    }
    let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
    let faces = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
    TriangleMesh { vertices, faces }
}

/// Raw (unnormalized) mesh of the analytic shape.
pub(crate) fn raw_mesh(kind: ShapeKind) -> TriangleMesh {
    match kind {
        ShapeKind::Sphere => sphere_mesh(64, 128),
        ShapeKind::Torus => torus_mesh(128, 48),
        ShapeKind::CubeSurface => cube_mesh(),
    }
}

/// Samples `n` points uniformly by area from the analytic shape and returns
/// them with a matching triangulation, both mapped into the shape's unit
/// bounding sphere.
pub fn make_shape(kind: ShapeKind, n: usize, seed: u64) -> Result<(PointCloud, TriangleMesh)> {
    if n < 16 {
        return Err(Error::param(format!("make_shape needs n >= 16, got {n}")));
    }
    let mut rng = stream_rng(seed, stream::SHAPE);
    let norm = kind.raw_bounds();
    let points = (0..n).map(|_| norm.apply(sample_raw(kind, &mut rng))).collect();
    let mesh = raw_mesh(kind).transformed(norm.center, norm.radius);
    let cloud = PointCloud::new(points)?.with_ref(kind.name());
    Ok((cloud, mesh))
}
