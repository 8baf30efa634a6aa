//! Complex-valued neural networks with trainable kernel activation functions.
//!
//! The crate covers the full pipeline for complex-valued image
//! classification: FFT features from IDX image sets, feedforward complex
//! networks whose hidden activations are kernel expansions over a fixed grid
//! dictionary (standard or widely linear), CR-calculus backpropagation,
//! Adagrad training with early stopping, and experiment tooling.

pub mod activations;
pub mod baseline;
pub mod cnum;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod kernels;
pub mod model;
pub mod model_file;
pub mod network;
pub mod optim;
pub(crate) mod persist;
pub mod report;

pub use cnum::{ComplexTensor, Cogradient, C64};
pub use error::{Error, Result};
