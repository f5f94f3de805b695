use serde::{Deserialize, Serialize};

use super::ParamStore;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators shaped like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ParamStore, config: AdamConfig) -> Self {
        let zeros = || params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        AdamState {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    /// One bias-corrected Adam update; `grads[i]` matches parameter slot `i`.
    pub fn step(&mut self, params: &mut ParamStore, grads: &[Vec<f64>]) -> Result<()> {
        if grads.len() != params.len() || grads.len() != self.m.len() {
            return Err(Error::param("adam: gradient count does not match parameters"));
        }
        for (slot, g) in grads.iter().enumerate() {
            if g.len() != params.get(slot).len() || g.len() != self.m[slot].len() {
                return Err(Error::param(format!(
                    "adam: gradient for '{}' has the wrong shape",
                    params.name(slot)
                )));
            }
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powf(self.step as f64);
        let bc2 = 1.0 - beta2.powf(self.step as f64);
        for (slot, g) in grads.iter().enumerate() {
            let p = &mut params.get_mut(slot).values;
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            for i in 0..g.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn scalar_store(w: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.push("w", Tensor::new(vec![1], vec![w]).unwrap()).unwrap();
        s
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = scalar_store(0.3);
        let mut st = AdamState::new(&p, AdamConfig::default());
        st.step(&mut p, &[vec![0.0]]).unwrap();
        assert_eq!(p.get(0).values[0], 0.3);
    }

    #[test]
    fn descends_on_square() {
        let mut p = scalar_store(1.0);
        let mut st = AdamState::new(&p, AdamConfig::default());
        st.step(&mut p, &[vec![2.0]]).unwrap();
        assert!(p.get(0).values[0] < 1.0);
    }

    #[test]
    fn converges_on_quadratic() {
        // f(w) = (w - 0)² from w = 1, lr 1e-2.
        let mut p = scalar_store(1.0);
        let cfg = AdamConfig {
            lr: 1e-2,
            ..AdamConfig::default()
        };
        let mut st = AdamState::new(&p, cfg);
        for _ in 0..500 {
            let w = p.get(0).values[0];
            st.step(&mut p, &[vec![2.0 * w]]).unwrap();
        }
        assert!(p.get(0).values[0].abs() < 1e-2, "{}", p.get(0).values[0]);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = scalar_store(1.0);
        let mut st = AdamState::new(&p, AdamConfig::default());
        assert!(st.step(&mut p, &[vec![1.0, 2.0]]).is_err());
    }
}
