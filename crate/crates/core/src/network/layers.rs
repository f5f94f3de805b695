use rand::Rng as _;

use crate::autodiff::{ParamStore, Tape, Tensor, Var};
use crate::error::Result;

/// Parameters of a [`ParamStore`] recorded as leaves on one tape.
#[derive(Clone, Debug)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn new(tape: &mut Tape, store: &ParamStore) -> Result<Self> {
        let vars = store
            .tensors()
            .iter()
            .map(|t| tape.leaf(t.shape.clone(), t.values.clone()))
            .collect::<Result<_>>()?;
        Ok(Bound { vars })
    }

    pub fn var(&self, slot: usize) -> Var {
        self.vars[slot]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Initialization of one linear layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Uniform with variance `2 / fan_in`, for layers feeding a ReLU.
    Kaiming,
    /// Uniform with variance `gain² / fan_in`.
    Scaled(f64),
    Zero,
}

pub(crate) fn init_weight(
    store: &mut ParamStore,
    name: &str,
    din: usize,
    dout: usize,
    init: Init,
    rng: &mut crate::rng::Rng,
) -> Result<usize> {
    let bound = match init {
        Init::Kaiming => (6.0 / din as f64).sqrt(),
        Init::Scaled(g) => g * (3.0 / din as f64).sqrt(),
        Init::Zero => 0.0,
    };
    let values = (0..din * dout)
        .map(|_| if bound > 0.0 { rng.gen_range(-bound..bound) } else { 0.0 })
        .collect();
    store.push(name, Tensor::new(vec![din, dout], values)?)
}

pub(crate) fn init_bias(store: &mut ParamStore, name: &str, dout: usize) -> Result<usize> {
    store.push(name, Tensor::zeros(vec![dout]))
}

/// Stack of affine layers with ReLU between them (none after the last).
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    /// `(weight slot, bias slot)` per layer.
    pub layers: Vec<(usize, usize)>,
    pub widths: Vec<usize>,
}

impl Mlp {
    /// `widths = [in, hidden…, out]`; `last` initializes the output layer.
    pub(crate) fn init(store: &mut ParamStore, name: &str, widths: &[usize], last: Init, rng: &mut crate::rng::Rng) -> Result<Self> {
        let mut layers = Vec::new();
        for (i, w) in widths.windows(2).enumerate() {
            let init = if i + 2 == widths.len() { last } else { Init::Kaiming };
            let ws = init_weight(store, &format!("{name}.{i}.weight"), w[0], w[1], init, rng)?;
            let bs = init_bias(store, &format!("{name}.{i}.bias"), w[1])?;
            layers.push((ws, bs));
        }
        Ok(Mlp {
            layers,
            widths: widths.to_vec(),
        })
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Var> {
        let mut h = x;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            h = tape.affine(h, p.var(w), Some(p.var(b)))?;
            if i + 1 < self.layers.len() {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }

    pub fn out_width(&self) -> usize {
        *self.widths.last().unwrap()
    }
}
