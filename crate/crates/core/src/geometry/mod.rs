//! Point-cloud and mesh primitives.

mod knn;
mod noise;
mod patch;
mod shapes;
mod sphere;

pub use knn::{knn, knn_points, NeighborIndex};
pub use noise::{add_noise, NoiseKind, NoiseModel};
pub use patch::{sample_paired_patches, sample_patch};
pub use shapes::{make_shape, ShapeKind, TORUS_MAJOR, TORUS_MINOR};
pub use sphere::{bounding_sphere, denormalize, normalize_unit_sphere, Normalization};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm_sq(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn dist_sq(a: Vec3, b: Vec3) -> f64 {
    norm_sq(sub(a, b))
}

/// Noise provenance carried alongside a corrupted cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseMeta {
    pub kind: NoiseKind,
    pub scale: f64,
    pub seed: u64,
}

/// Ordered list of 3D points with optional provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub clean_ref: Option<String>,
    pub noise_meta: Option<NoiseMeta>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("point cloud must contain at least one point"));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::param(format!("point {i} has a non-finite coordinate")));
        }
        Ok(PointCloud {
            points,
            clean_ref: None,
            noise_meta: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Row-major `N×3` copy of the coordinates.
    pub fn flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if !values.len().is_multiple_of(3) {
            return Err(Error::param("flat coordinate buffer length is not a multiple of 3"));
        }
        Self::new(values.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    pub fn centroid(&self) -> Vec3 {
        let n = self.points.len() as f64;
        let s = self.points.iter().fold([0.0; 3], |acc, p| add(acc, *p));
        scale(s, 1.0 / n)
    }

    pub fn with_ref(mut self, name: impl Into<String>) -> Self {
        self.clean_ref = Some(name.into());
        self
    }
}

/// Triangle mesh: the ground-truth surface for P2M and synthetic sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates indices and drops nothing: a zero-area face is an error.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriangleMesh { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        if self.faces.is_empty() {
            return Err(Error::param("mesh has no faces"));
        }
        let v = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&i| i >= v) {
                return Err(Error::param(format!("face {fi} references a vertex out of range")));
            }
            if self.face_area(fi) <= 1e-300 {
                return Err(Error::param(format!("face {fi} is degenerate (zero area)")));
            }
        }
        if self.vertices.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::param("mesh has a non-finite vertex"));
        }
        Ok(())
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let f = self.faces[face];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * norm_sq(cross(sub(b, a), sub(c, a))).sqrt()
    }

    /// Applies `p -> (p - center) / radius` to every vertex.
    pub fn transformed(&self, center: Vec3, radius: f64) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&p| scale(sub(p, center), 1.0 / radius)).collect(),
            faces: self.faces.clone(),
        }
    }
}
