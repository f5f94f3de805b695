use super::{Tape, Var};
use crate::error::{Error, Result};

/// Compares reverse-mode gradients with central differences.
///
/// `f` records a scalar loss on a fresh tape for the input vector and returns
/// `(loss, input_leaf)`. The result is
/// `max_i |g_ad − g_fd| / max(1, |g_fd|)`.
pub fn grad_check<F>(mut f: F, point: &[f64], step: f64) -> Result<f64>
where
    F: FnMut(&mut Tape, &[f64]) -> Result<(Var, Var)>,
{
    let mut tape = Tape::new();
    let (loss, input) = f(&mut tape, point)?;
    let grads = tape.backward(loss)?;
    let analytic = grads.get_or_zeros(input, point.len());

    let mut eval = |x: &[f64]| -> Result<f64> {
        let mut t = Tape::new();
        let (l, _) = f(&mut t, x).map_err(|e| match e {
            Error::Numeric(m) => Error::Numeric(format!("function not finite at perturbed point: {m}")),
            other => other,
        })?;
        let v = t.value(l)[0];
        if !v.is_finite() {
            return Err(Error::Numeric("function not finite at perturbed point".into()));
        }
        Ok(v)
    };

    let mut x = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..point.len() {
        let orig = x[i];
        x[i] = orig + step;
        let up = eval(&x)?;
        x[i] = orig - step;
        let down = eval(&x)?;
        x[i] = orig;
        let fd = (up - down) / (2.0 * step);
        worst = worst.max((analytic[i] - fd).abs() / fd.abs().max(1.0));
    }
    Ok(worst)
}
