use rayon::prelude::*;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::geometry::{dist_sq, PointCloud, Vec3};

/// For each point of `from`, the index of its nearest point in `to`
/// (smallest index on ties).
pub fn nearest_indices(from: &[Vec3], to: &[Vec3]) -> Vec<usize> {
    from.par_iter()
        .map(|&p| {
            let mut best = (f64::INFINITY, 0usize);
            for (j, &q) in to.iter().enumerate() {
                let d = dist_sq(p, q);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect()
}

fn mean_nearest_sq(from: &[Vec3], to: &[Vec3]) -> f64 {
    let nn = nearest_indices(from, to);
    let total: f64 = from.iter().zip(&nn).map(|(&p, &j)| dist_sq(p, to[j])).sum();
    total / from.len() as f64
}

/// `½ (mean_x min_y ‖x−y‖² + mean_y min_x ‖x−y‖²)`.
pub fn chamfer_points(x: &[Vec3], y: &[Vec3]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::param("chamfer distance of an empty cloud"));
    }
    Ok(0.5 * (mean_nearest_sq(x, y) + mean_nearest_sq(y, x)))
}

pub fn chamfer(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    chamfer_points(&x.points, &y.points)
}

fn coords(tape: &Tape, v: Var) -> Result<Vec<Vec3>> {
    let shape = tape.shape(v);
    if shape.len() != 2 || shape[1] != 3 {
        return Err(Error::param(format!("expected an N×3 tensor, got {shape:?}")));
    }
    Ok(tape.value(v).chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
}

/// Chamfer distance on the tape. Nearest-neighbor indices are fixed by the
/// forward values; gradients flow through the matched coordinates.
pub fn differentiable_chamfer(tape: &mut Tape, x: Var, y: Var) -> Result<Var> {
    let xs = coords(tape, x)?;
    let ys = coords(tape, y)?;
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::param("chamfer distance of an empty cloud"));
    }
    let x_to_y = nearest_indices(&xs, &ys);
    let y_to_x = nearest_indices(&ys, &xs);
    let fwd = directed_term(tape, x, y, x_to_y)?;
    let bwd = directed_term(tape, y, x, y_to_x)?;
    let both = tape.add(fwd, bwd)?;
    Ok(tape.scale(both, 0.5))
}

fn directed_term(tape: &mut Tape, from: Var, to: Var, nn: Vec<usize>) -> Result<Var> {
    let n = nn.len();
    let matched = tape.gather_rows(to, &nn, 1)?;
    let matched = tape.reshape(matched, &[n, 3])?;
    let diff = tape.sub(from, matched)?;
    let sq = tape.mul(diff, diff)?;
    // Sum of three coordinates per point, averaged over points.
    let total = tape.sum_all(sq);
    Ok(tape.scale(total, 1.0 / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_check;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn pc(p: Vec<Vec3>) -> PointCloud {
        PointCloud::new(p).unwrap()
    }

    #[test]
    fn hand_examples() {
        let a = pc(vec![[0.0; 3], [0.5, 1.0, 0.0]]);
        assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
        assert_eq!(chamfer(&pc(vec![[0.0; 3]]), &pc(vec![[1.0, 0.0, 0.0]])).unwrap(), 1.0);
        let x = pc(vec![[0.0; 3], [2.0, 0.0, 0.0]]);
        let y = pc(vec![[1.0, 0.0, 0.0]]);
        assert_eq!(chamfer(&x, &y).unwrap(), 1.0);
        assert_eq!(chamfer(&y, &x).unwrap(), 1.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(chamfer_points(&[], &[[0.0; 3]]).is_err());
    }

    #[test]
    fn squared_homogeneity() {
        let mut rng = stream_rng(1, 0);
        let x: Vec<Vec3> = (0..40).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
        let y: Vec<Vec3> = (0..30).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
        let s = 3.5;
        let xs: Vec<Vec3> = x.iter().map(|p| p.map(|c| c * s)).collect();
        let ys: Vec<Vec3> = y.iter().map(|p| p.map(|c| c * s)).collect();
        let a = chamfer_points(&xs, &ys).unwrap();
        let b = s * s * chamfer_points(&x, &y).unwrap();
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn differentiable_value_and_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(vec![1, 3], vec![0.0, 0.0, 0.0]).unwrap();
        let y = tape.leaf(vec![1, 3], vec![1.0, 0.0, 0.0]).unwrap();
        let cd = differentiable_chamfer(&mut tape, x, y).unwrap();
        assert_eq!(tape.value(cd)[0], 1.0);
        let g = tape.backward(cd).unwrap();
        assert_eq!(g.get(x).unwrap(), &[-2.0, 0.0, 0.0]);

        let mut tape = Tape::new();
        let v = vec![0.1, 0.2, 0.3, -0.4, 0.5, 0.6];
        let x = tape.leaf(vec![2, 3], v.clone()).unwrap();
        let y = tape.leaf(vec![2, 3], v).unwrap();
        let cd = differentiable_chamfer(&mut tape, x, y).unwrap();
        let g = tape.backward(cd).unwrap();
        assert!(g.get(x).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn differentiable_matches_metric_and_finite_differences() {
        let mut rng = stream_rng(2, 0);
        for _ in 0..20 {
            let x: Vec<f64> = (0..12 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..9 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let to_pts = |v: &[f64]| v.chunks(3).map(|c| [c[0], c[1], c[2]]).collect::<Vec<Vec3>>();
            let mut tape = Tape::new();
            let xv = tape.leaf(vec![12, 3], x.clone()).unwrap();
            let yv = tape.leaf(vec![9, 3], y.clone()).unwrap();
            let cd = differentiable_chamfer(&mut tape, xv, yv).unwrap();
            let exact = chamfer_points(&to_pts(&x), &to_pts(&y)).unwrap();
            assert!((tape.value(cd)[0] - exact).abs() < 1e-12);

            let y2 = y.clone();
            let err = grad_check(
                |tape, v| {
                    let xv = tape.leaf(vec![12, 3], v.to_vec())?;
                    let yv = tape.constant(vec![9, 3], y2.clone())?;
                    Ok((differentiable_chamfer(tape, xv, yv)?, xv))
                },
                &x,
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "{err}");
        }
    }
}
