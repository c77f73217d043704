//! Error type for model construction, training, and synthesis.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("token sequence is empty")]
    EmptyTokens,
    #[error("alignment needs at least one frame per token: {tokens} tokens, {frames} frames")]
    AlignTooLong { tokens: usize, frames: usize },
    #[error("non-finite loss at epoch {epoch}, step {step}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        detail: String,
    },
    #[error("non-finite parameter {name} after step {step}")]
    NonFiniteParam { name: String, step: usize },
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("invalid model config: {0}")]
    BadConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
