use serde::{Deserialize, Serialize};

use super::layers::{init_bias, init_weight, Init, Mlp};
use crate::autodiff::ParamStore;
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

/// Architecture hyperparameters shared by every block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyper {
    /// Neighborhood size for the encoder graphs, attention and mirror branch.
    pub k: usize,
    /// Feature width.
    pub channels: usize,
    /// Number of denoiser blocks.
    pub blocks: usize,
    /// Number of graph layers in the encoder.
    pub encoder_layers: usize,
    /// Displacements are `max_step · tanh(·)`.
    pub max_step: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            k: 16,
            channels: 32,
            blocks: 2,
            encoder_layers: 3,
            max_step: 1.0,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.channels < 4 || self.blocks == 0 || self.encoder_layers == 0 {
            return Err(Error::Config(format!("invalid model hyperparameters {self:?}")));
        }
        if !(self.max_step > 0.0) || !self.max_step.is_finite() {
            return Err(Error::Config("max_step must be positive".into()));
        }
        Ok(())
    }

    /// Encoder widths from 3 up to `channels`.
    pub fn encoder_widths(&self) -> Vec<usize> {
        let t = self.encoder_layers;
        let mut w = vec![3];
        for i in 1..=t {
            // Doubling towards the target width: C/2^(T-i).
            w.push((self.channels >> (t - i)).max(4));
        }
        *w.last_mut().unwrap() = self.channels;
        w
    }
}

/// One graph layer: `g' = h_self(g_i) + Σ_j h_edge([g_i ∥ g_j − g_i])`.
///
/// The first affine map of `h_edge` acts on the concatenation, so it is kept
/// as two blocks: `w_centre` multiplies `g_i` and `w_diff` multiplies
/// `g_j − g_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderLayer {
    pub din: usize,
    pub dout: usize,
    pub self_mlp: Mlp,
    pub edge_w_centre: usize,
    pub edge_w_diff: usize,
    pub edge_b: usize,
    pub edge_out: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub layers: Vec<EncoderLayer>,
}

/// Point self-attention weights for one block.
///
/// The score MLP's first layer acts on `[q_i ∥ k_j]`; its weight is split
/// into the query block `score_wq` and the key block `score_wk`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsaParams {
    pub query: Mlp,
    pub key: Mlp,
    pub score_wq: usize,
    pub score_wk: usize,
    pub score_b: usize,
    pub score_out: (usize, usize),
    pub value: Mlp,
    /// Coordinate lift used when the attention consumes `[u ∥ x]` pairs.
    pub lift: Mlp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderParams {
    pub mlp: Mlp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockParams {
    pub psa: PsaParams,
    pub decoder: DecoderParams,
}

/// All learnable weights plus the slot layout that gives them structure.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub hyper: Hyper,
    pub store: ParamStore,
    pub encoder: EncoderParams,
    pub blocks: Vec<BlockParams>,
}

impl Model {
    /// Kaiming-uniform weights, zero biases, and a zero output layer in every
    /// decoder so the untrained model is the identity denoiser.
    pub fn new(hyper: Hyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut rng = stream_rng(seed, stream::INIT);
        let mut store = ParamStore::new();
        let c = hyper.channels;
        let k = hyper.k as f64;

        let widths = hyper.encoder_widths();
        let mut layers = Vec::new();
        for (t, w) in widths.windows(2).enumerate() {
            let (din, dout) = (w[0], w[1]);
            let name = format!("encoder.{t}");
            let self_mlp = Mlp::init(&mut store, &format!("{name}.self"), &[din, dout, dout], Init::Scaled(1.0), &mut rng)?;
            let edge_w_centre = init_weight(&mut store, &format!("{name}.edge.0.centre"), din, dout, Init::Kaiming, &mut rng)?;
            let edge_w_diff = init_weight(&mut store, &format!("{name}.edge.0.diff"), din, dout, Init::Kaiming, &mut rng)?;
            let edge_b = init_bias(&mut store, &format!("{name}.edge.0.bias"), dout)?;
            // The edge term is summed over k neighbors.
            let ow = init_weight(
                &mut store,
                &format!("{name}.edge.1.weight"),
                dout,
                dout,
                Init::Scaled(1.0 / k),
                &mut rng,
            )?;
            let ob = init_bias(&mut store, &format!("{name}.edge.1.bias"), dout)?;
            layers.push(EncoderLayer {
                din,
                dout,
                self_mlp,
                edge_w_centre,
                edge_w_diff,
                edge_b,
                edge_out: (ow, ob),
            });
        }

        let mut blocks = Vec::new();
        for l in 0..hyper.blocks {
            let name = format!("block.{l}");
            let query = Mlp::init(&mut store, &format!("{name}.psa.query"), &[c, c], Init::Scaled(1.0), &mut rng)?;
            let key = Mlp::init(&mut store, &format!("{name}.psa.key"), &[c, c], Init::Scaled(1.0), &mut rng)?;
            let score_wq = init_weight(&mut store, &format!("{name}.psa.score.0.query"), c, c, Init::Kaiming, &mut rng)?;
            let score_wk = init_weight(&mut store, &format!("{name}.psa.score.0.key"), c, c, Init::Kaiming, &mut rng)?;
            let score_b = init_bias(&mut store, &format!("{name}.psa.score.0.bias"), c)?;
            let sw = init_weight(&mut store, &format!("{name}.psa.score.1.weight"), c, c, Init::Scaled(1.0), &mut rng)?;
            let sb = init_bias(&mut store, &format!("{name}.psa.score.1.bias"), c)?;
            let value = Mlp::init(&mut store, &format!("{name}.psa.value"), &[c, c, c], Init::Scaled(1.0), &mut rng)?;
            let lift = Mlp::init(&mut store, &format!("{name}.psa.lift"), &[3, c, c], Init::Scaled(1.0), &mut rng)?;
            let decoder = Mlp::init(
                &mut store,
                &format!("{name}.decoder"),
                &[c, c, (c / 2).max(4), 3],
                Init::Zero,
                &mut rng,
            )?;
            blocks.push(BlockParams {
                psa: PsaParams {
                    query,
                    key,
                    score_wq,
                    score_wk,
                    score_b,
                    score_out: (sw, sb),
                    value,
                    lift,
                },
                decoder: DecoderParams { mlp: decoder },
            });
        }
        Ok(Model {
            hyper,
            store,
            encoder: EncoderParams { layers },
            blocks,
        })
    }

    /// Rebuilds a model with the layout implied by `hyper` and takes the
    /// weights from `store`, checking names and shapes.
    pub fn from_store(hyper: Hyper, store: ParamStore) -> Result<Self> {
        let mut model = Model::new(hyper, 0)?;
        if store.names() != model.store.names() {
            return Err(Error::Config("checkpoint parameters do not match the model layout".into()));
        }
        for (a, b) in store.tensors().iter().zip(model.store.tensors()) {
            if a.shape != b.shape {
                return Err(Error::Config("checkpoint tensor shapes do not match the model".into()));
            }
        }
        model.store = store;
        Ok(model)
    }

    /// Sets every decoder output layer to zero (identity denoiser).
    pub fn zero_decoders(&mut self) {
        for b in &self.blocks {
            let &(w, bias) = b.decoder.mlp.layers.last().unwrap();
            self.store.get_mut(w).values.iter_mut().for_each(|v| *v = 0.0);
            self.store.get_mut(bias).values.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}
