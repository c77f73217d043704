//! Small hand-rolled neural-network toolkit: parameter tensors, layers with
//! explicit forward/backward passes, Adam, and finite-difference checking.
//!
//! Everything is generic over [`Real`] so the same network code runs in f32
//! for training and benchmarking and in f64 for gradient verification.

pub mod act;
pub mod conv;
pub mod embed;
pub mod fd;
pub mod linear;
pub mod norm;
pub mod optim;
pub mod real;
pub mod rng;
pub mod tensor;

pub use act::{relu, relu_bwd, sigmoid, sigmoid_bwd, silu, silu_bwd, Dropout};
pub use conv::Conv1d;
pub use embed::Embedding;
pub use linear::Linear;
pub use norm::{LayerNorm, LayerNormCache};
pub use optim::{cosine_lr, Adam};
pub use real::Real;
pub use rng::Prng;
pub use tensor::{nudge_param, param_count, param_index, read_grad, zero_grads, Module, Tensor};
