//! Failure modes of the measurement harness.

use acoustic_model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Throughput over zero batches has no median.
    #[error("need at least one timed batch")]
    ZeroBatches,
    /// A batch of zero utterances does no work to time.
    #[error("batch size must be at least one")]
    ZeroBatch,
    /// Memory numbers are garbage unless the counting allocator is the
    /// process-global allocator.
    #[error("counting allocator is not installed as the global allocator")]
    AllocatorInactive,
    /// A power-law fit through fewer points is not trustworthy.
    #[error("runtime scaling needs at least {need} sequence lengths, got {got}")]
    NeedMorePoints { need: usize, got: usize },
    /// Scaling fits assume the lengths form a geometric progression.
    #[error("sequence lengths must grow by a constant factor > 1")]
    NotGeometric,
    #[error(transparent)]
    Model(#[from] ModelError),
}
