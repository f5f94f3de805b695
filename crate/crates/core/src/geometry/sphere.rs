//! Minimal enclosing sphere (randomized incremental construction) and
//! unit-sphere normalization.

use rand::seq::SliceRandom;

use super::{add, cross, dist_sq, dot, norm_sq, scale, sub, PointCloud, Vec3};
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

#[derive(Clone, Copy, Debug)]
struct Ball {
    center: Vec3,
    r2: f64,
}

impl Ball {
    fn point(p: Vec3) -> Self {
        Ball { center: p, r2: 0.0 }
    }

    fn contains(&self, p: Vec3) -> bool {
        let d = dist_sq(self.center, p);
        d <= self.r2 * (1.0 + 1e-12) + 1e-24
    }

    fn diameter(a: Vec3, b: Vec3) -> Self {
        let c = scale(add(a, b), 0.5);
        Ball {
            center: c,
            r2: dist_sq(c, a).max(dist_sq(c, b)),
        }
    }

    fn circum3(a: Vec3, b: Vec3, c: Vec3) -> Self {
        let u = sub(b, a);
        let v = sub(c, a);
        let w = cross(u, v);
        let w2 = norm_sq(w);
        let scale_ref = norm_sq(u).max(norm_sq(v));
        if w2 <= 1e-24 * scale_ref * scale_ref {
            // Collinear: the farthest pair spans the ball.
            return [Ball::diameter(a, b), Ball::diameter(a, c), Ball::diameter(b, c)]
                .into_iter()
                .max_by(|x, y| x.r2.partial_cmp(&y.r2).unwrap())
                .unwrap();
        }
        let t = sub(scale(v, norm_sq(u)), scale(u, norm_sq(v)));
        let off = scale(cross(t, w), 0.5 / w2);
        let center = add(a, off);
        let r2 = [a, b, c].iter().map(|&p| dist_sq(center, p)).fold(0.0, f64::max);
        Ball { center, r2 }
    }

    fn circum4(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> Self {
        let u = sub(b, a);
        let v = sub(c, a);
        let t = sub(d, a);
        let det = dot(u, cross(v, t));
        let scale_ref = norm_sq(u).max(norm_sq(v)).max(norm_sq(t)).powf(1.5);
        if det.abs() <= 1e-12 * scale_ref {
            // Coplanar: smallest triangle circle covering all four.
            let pts = [a, b, c, d];
            let mut best: Option<Ball> = None;
            for skip in 0..4 {
                let tri: Vec<Vec3> = (0..4).filter(|&i| i != skip).map(|i| pts[i]).collect();
                let ball = Ball::circum3(tri[0], tri[1], tri[2]);
                if pts.iter().all(|&p| ball.contains(p)) && best.is_none_or(|b| ball.r2 < b.r2) {
                    best = Some(ball);
                }
            }
            return best.unwrap_or_else(|| Ball::circum3(a, b, c));
        }
        // Solve 2[u;v;t] x = [|u|²;|v|²;|t|²] by Cramer's rule.
        let rhs = [norm_sq(u), norm_sq(v), norm_sq(t)];
        let vt = cross(v, t);
        let tu = cross(t, u);
        let uv = cross(u, v);
        let off = scale(add(add(scale(vt, rhs[0]), scale(tu, rhs[1])), scale(uv, rhs[2])), 0.5 / det);
        let center = add(a, off);
        let r2 = [a, b, c, d].iter().map(|&p| dist_sq(center, p)).fold(0.0, f64::max);
        Ball { center, r2 }
    }
}

fn minimal_ball(points: &[Vec3]) -> Ball {
    let mut pts = points.to_vec();
    // Expected linear time needs a random insertion order; the seed is fixed
    // so the result is reproducible.
    pts.shuffle(&mut stream_rng(0x5eed, stream::SPHERE));
    let mut ball = Ball::point(pts[0]);
    for i in 1..pts.len() {
        if ball.contains(pts[i]) {
            continue;
        }
        ball = Ball::point(pts[i]);
        for j in 0..i {
            if ball.contains(pts[j]) {
                continue;
            }
            ball = Ball::diameter(pts[i], pts[j]);
            for l in 0..j {
                if ball.contains(pts[l]) {
                    continue;
                }
                ball = Ball::circum3(pts[i], pts[j], pts[l]);
                for m in 0..l {
                    if ball.contains(pts[m]) {
                        continue;
                    }
                    ball = Ball::circum4(pts[i], pts[j], pts[l], pts[m]);
                }
            }
        }
    }
    ball
}

/// Smallest sphere enclosing every point of the cloud: `(center, radius)`.
pub fn bounding_sphere(cloud: &PointCloud) -> Result<(Vec3, f64)> {
    bounding_sphere_of(&cloud.points)
}

pub(crate) fn bounding_sphere_of(points: &[Vec3]) -> Result<(Vec3, f64)> {
    if points.is_empty() {
        return Err(Error::param("bounding sphere of an empty cloud"));
    }
    let ball = minimal_ball(points);
    // Report the exact covering radius for the computed center.
    let r = points.iter().map(|&p| dist_sq(ball.center, p)).fold(0.0, f64::max).sqrt();
    Ok((ball.center, r))
}

/// Transform recorded by [`normalize_unit_sphere`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalization {
    pub center: Vec3,
    pub radius: f64,
}

impl Normalization {
    pub fn apply(&self, p: Vec3) -> Vec3 {
        scale(sub(p, self.center), 1.0 / self.radius)
    }

    pub fn invert(&self, p: Vec3) -> Vec3 {
        add(scale(p, self.radius), self.center)
    }
}

/// Maps the cloud into its own unit bounding sphere.
pub fn normalize_unit_sphere(cloud: &PointCloud) -> Result<(PointCloud, Normalization)> {
    let (center, radius) = bounding_sphere(cloud)?;
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::param("cannot normalize a cloud with zero bounding radius"));
    }
    let norm = Normalization { center, radius };
    let mut out = cloud.clone();
    out.points = cloud.points.iter().map(|&p| norm.apply(p)).collect();
    Ok((out, norm))
}

pub fn denormalize(cloud: &PointCloud, norm: &Normalization) -> PointCloud {
    let mut out = cloud.clone();
    out.points = cloud.points.iter().map(|&p| norm.invert(p)).collect();
    out
}
