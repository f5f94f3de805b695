use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{add, dist_sq, dot, scale, sub, PointCloud, TriangleMesh, Vec3};

/// Closest point on triangle `abc` to `p`, covering the vertex, edge and
/// face Voronoi regions.
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub(p, b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return add(a, scale(ab, d1 / (d1 - d3)));
    }
    let cp = sub(p, c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return add(a, scale(ac, d2 / (d2 - d6)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return add(b, scale(sub(c, b), w));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    add(a, add(scale(ab, v), scale(ac, w)))
}

struct FaceBound {
    centre: Vec3,
    radius: f64,
}

fn face_bounds(mesh: &TriangleMesh) -> Vec<FaceBound> {
    (0..mesh.faces.len())
        .map(|f| {
            let [a, b, c] = mesh.triangle(f);
            let centre = scale(add(add(a, b), c), 1.0 / 3.0);
            let radius = [a, b, c].iter().map(|&v| dist_sq(v, centre)).fold(0.0, f64::max).sqrt();
            FaceBound { centre, radius }
        })
        .collect()
}

fn squared_distance_to_mesh(p: Vec3, mesh: &TriangleMesh, bounds: &[FaceBound]) -> f64 {
    // Seed with the face whose centroid is closest, then prune by
    // bounding-sphere lower bounds.
    let seed = bounds
        .iter()
        .enumerate()
        .map(|(i, b)| (dist_sq(p, b.centre), i))
        .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc })
        .1;
    let [a, b, c] = mesh.triangle(seed);
    let mut best = dist_sq(p, closest_point_on_triangle(p, a, b, c));
    for (f, fb) in bounds.iter().enumerate() {
        let gap = dist_sq(p, fb.centre).sqrt() - fb.radius;
        if gap > 0.0 && gap * gap >= best {
            continue;
        }
        let [a, b, c] = mesh.triangle(f);
        let d = dist_sq(p, closest_point_on_triangle(p, a, b, c));
        if d < best {
            best = d;
        }
    }
    best
}

/// Mean squared distance from each point to its nearest triangle
/// (one-sided, point to mesh).
pub fn point_to_mesh_points(points: &[Vec3], mesh: &TriangleMesh) -> Result<f64> {
    mesh.validate()?;
    if points.is_empty() {
        return Err(crate::error::Error::param("point-to-mesh of an empty cloud"));
    }
    let bounds = face_bounds(mesh);
    let per_point: Vec<f64> = points.par_iter().map(|&p| squared_distance_to_mesh(p, mesh, &bounds)).collect();
    Ok(per_point.iter().sum::<f64>() / points.len() as f64)
}

pub fn point_to_mesh(cloud: &PointCloud, mesh: &TriangleMesh) -> Result<f64> {
    point_to_mesh_points(&cloud.points, mesh)
}
