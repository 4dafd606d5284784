//! Reverse-mode automatic differentiation core.
//!
//! A Wengert tape over flat `f64` buffers: forward calls record primitive
//! operations, `backward` replays them in reverse accumulating exact
//! vector-Jacobian products. On top of the tape sit the neural layers the
//! policy needs (fully connected, embedding, multi-head attention, LSTM
//! cell, layer norm) and the Adam optimizer. Everything is 64-bit and
//! deterministic: two runs with identical seeds produce bit-identical
//! parameters.

pub mod adam;
pub mod checkpoint;
pub mod dist;
pub mod gradcheck;
pub mod kernels;
pub mod nn;
pub mod params;
pub mod tape;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use dist::{categorical_greedy, categorical_sample, CategoricalSample};
pub use nn::{Embedding, LayerNorm, Linear, LstmCell, MultiHeadAttention};
pub use params::{ParamId, ParameterSet};
pub use tape::{NodeId, Tape};
pub use tensor::Tensor;
