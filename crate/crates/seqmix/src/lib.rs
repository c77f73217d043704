//! Interchangeable sequence-mixing layers: softmax attention, a selective
//! state-space scan (scalar-decay SSD), its bidirectional quasiseparable
//! extension, and parameter-free Fourier mixing.
//!
//! Each mixer exposes the same (L, width) -> (L, width) contract plus an
//! explicit backward pass. `oracle` holds independently written brute-force
//! reference implementations used by the test suites; `check` wires
//! backpropagated gradients to central finite differences.

pub mod attn;
pub mod check;
pub mod fnet;
pub mod hydra;
pub mod layer;
pub mod oracle;
pub mod ssd;

pub use attn::AttnLayer;
pub use check::backward_check;
pub use fnet::fnet_forward;
pub use hydra::{flip_rows, hydra_forward, materialize_hydra, shift_down, shift_up, HydraParams};
pub use layer::{
    cross_mix, cross_mix_backward, scan_heads, CrossCache, HydraLayer, Mixer, MixerCache,
    MixerKind, SsdLayer, UnknownMixer, SCAN_STATE_DIM,
};
pub use ssd::{materialize_ssd, ssd_forward, ssd_forward_cached, ssd_vjp, SsdParams};
