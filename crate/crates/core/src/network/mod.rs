//! The denoising network: dynamic-graph encoder, point self-attention,
//! displacement decoder and the iterative block chain.

mod forward;
mod layers;
mod model;

pub use forward::{
    decode, denoise_forward, denoise_values, encode, mirror_branch, psa, psa_core, DenoiseTrajectory, MirrorConfig, MirrorNeighborhood,
    MirrorRecord,
};
pub use layers::{Bound, Mlp};
pub use model::{BlockParams, DecoderParams, EncoderLayer, EncoderParams, Hyper, Model, PsaParams};
