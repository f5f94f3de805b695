//! Reverse-mode automatic differentiation over dense `f64` tensors, with
//! the operator set the denoising network needs, Adam, and a
//! central-difference gradient checker.

mod adam;
mod checkpoint;
mod gradcheck;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::grad_check;
pub use tape::{Activation, Gradients, Reduction, Tape, Var};
pub use tensor::{ParamStore, Tensor};
