//! Runtime-versus-length scaling of the sequence mixers.
//!
//! Each mixer's forward pass is timed at a geometric ladder of sequence
//! lengths, and a power law is fitted through the points in log-log space.
//! The fitted exponent separates quadratic-time mixing from (near-)linear
//! mixing; the fit's r² flags noisy runs instead of letting them masquerade
//! as evidence.

use ndarray::Array2;
use nnet::{Prng, Real};
use seqmix::{Mixer, MixerKind};

use crate::error::BenchError;
use crate::timing::{log_log_fit, median_seconds, TIMED_RUNS, WARMUP_RUNS};

/// Fewest ladder points a fit will accept.
pub const MIN_SCALING_POINTS: usize = 4;
/// Fits with r² below this are reported but flagged unreliable.
pub const RELIABLE_R2: f64 = 0.95;

/// Fitted runtime exponent for one mixer.
#[derive(Debug, Clone, Copy)]
pub struct ScalingRow {
    pub mixer: MixerKind,
    /// Exponent of the best-fit power law runtime ~ length^slope.
    pub slope: f64,
    /// Coefficient of determination of the log-log fit.
    pub r2: f64,
    /// Whether r² clears [`RELIABLE_R2`].
    pub reliable: bool,
}

fn validate_ladder(seq_lens: &[usize]) -> Result<(), BenchError> {
    if seq_lens.len() < MIN_SCALING_POINTS {
        return Err(BenchError::NeedMorePoints {
            need: MIN_SCALING_POINTS,
            got: seq_lens.len(),
        });
    }
    if seq_lens[0] == 0 || seq_lens[1] <= seq_lens[0] {
        return Err(BenchError::NotGeometric);
    }
    // Constant ratio, checked by cross-multiplication to stay in integers.
    for w in seq_lens.windows(2).skip(1) {
        if w[1] * seq_lens[0] != seq_lens[1] * w[0] {
            return Err(BenchError::NotGeometric);
        }
    }
    Ok(())
}

/// Times one forward pass per (mixer, length) pair — warm-ups discarded,
/// median of repeated runs, single-threaded — and fits runtime ~ length^slope
/// for each mixer over the whole ladder.
pub fn scaling_report<F: Real>(
    kinds: &[MixerKind],
    seq_lens: &[usize],
    dim: usize,
) -> Result<Vec<ScalingRow>, BenchError> {
    validate_ladder(seq_lens)?;
    let mut rows = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let mut rng = Prng::seed(3);
        let layer = Mixer::<F>::new(kind, dim, &mut rng);
        let mut times = Vec::with_capacity(seq_lens.len());
        for &len in seq_lens {
            let x: Array2<F> = rng.normal_array2((len, dim), 1.0);
            let t = median_seconds(WARMUP_RUNS, TIMED_RUNS, || {
                let (y, _) = layer.forward(x.view(), false);
                std::hint::black_box(y.len());
            });
            times.push(t);
        }
        let (slope, r2) = log_log_fit(seq_lens, &times);
        rows.push(ScalingRow {
            mixer: kind,
            slope,
            r2,
            reliable: r2 >= RELIABLE_R2,
        });
    }
    Ok(rows)
}
