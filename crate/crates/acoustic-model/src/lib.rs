//! Multilingual text-to-mel synthesizer: a token encoder over pluggable
//! sequence mixers, a duration predictor with monotonic alignment, speaker
//! and language conditioning, and a flow-matching decoder integrated with a
//! fixed-step Euler sampler.

pub mod align;
pub mod block;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod euler;
pub mod loss;
pub mod model;
pub mod train;

pub use align::monotonic_align;
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, LoadedCheckpoint};
pub use config::{count_parameters, ModelConfig};
pub use error::ModelError;
pub use euler::euler_integrate;
pub use loss::{flow_pair, item_loss, DrawMode, FrozenDraws, LossParts};
pub use model::{durations_from_log, repeat_rows, Model};
pub use train::{MelStats, TrainConfig, TrainItem, Trainer};
