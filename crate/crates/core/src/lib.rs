//! Unsupervised point-cloud denoising with self-induced mirror-point
//! consistency.
//!
//! The crate covers the whole pipeline: synthetic shapes and noise models
//! ([`geometry`]), evaluation distances ([`metrics`]), a small reverse-mode
//! differentiation engine ([`autodiff`]), the denoising network
//! ([`network`]), the training objectives ([`loss`]), Monte-Carlo checks of
//! the consistency analysis ([`theory`]) and the command-line orchestration
//! ([`pipeline`]).

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod error;
pub mod geometry;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod network;
pub mod pipeline;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
