//! Throughput, real-time factor, and peak-memory measurements.
//!
//! Every timed quantity uses the monotonic clock, discards warm-up runs, and
//! reports a median, so one scheduler hiccup cannot skew a number. Memory
//! figures come from the counting allocator and are refused when it is not
//! installed. None of the measurements mutates model parameters; callers can
//! confirm with [`param_checksum`].

use acoustic_model::{MelStats, Model};
use ndarray::Array2;
use nnet::{param_count, Module, Prng, Real};
use seqmix::{Mixer, MixerKind};

use crate::alloc::{allocator_active, transient_peak};
use crate::error::BenchError;
use crate::timing::{median_seconds, TIMED_RUNS, WARMUP_RUNS};

/// One synthesis workload: what to say, who says it, and how the frame count
/// converts to audio time.
#[derive(Debug, Clone)]
pub struct SynthSpec<'a> {
    pub tokens: &'a [usize],
    pub speaker: usize,
    pub language: usize,
    /// Flow integration steps per utterance.
    pub n_steps: usize,
    /// Seconds of audio represented by one mel frame (hop / sample rate).
    pub frame_hop_s: f64,
    /// Base noise seed; batch items offset from it.
    pub seed: u64,
}

/// Synthesis speed in both units of interest: how many utterances and how
/// many seconds of audio the model produces per wall-clock second.
#[derive(Debug, Clone, Copy)]
pub struct Throughput {
    pub utterances_per_s: f64,
    pub audio_seconds_per_s: f64,
}

fn synth_frames(model: &Model, stats: &MelStats, spec: &SynthSpec, seed: u64) -> Result<usize, BenchError> {
    let mel = model.synthesize(
        spec.tokens,
        spec.speaker,
        spec.language,
        spec.n_steps,
        seed,
        stats,
    )?;
    Ok(mel.ncols())
}

/// Median utterances per second over `n_batches` timed batches of
/// `batch_size` syntheses each, after warm-up runs that are discarded.
pub fn measure_throughput(
    model: &Model,
    stats: &MelStats,
    spec: &SynthSpec,
    batch_size: usize,
    n_batches: usize,
) -> Result<Throughput, BenchError> {
    if batch_size == 0 {
        return Err(BenchError::ZeroBatch);
    }
    if n_batches == 0 {
        return Err(BenchError::ZeroBatches);
    }
    // Validates the workload once and fixes the audio length; durations are
    // deterministic in the tokens, so every seed yields the same frame count.
    let frames = synth_frames(model, stats, spec, spec.seed)?;
    let audio_s = frames as f64 * spec.frame_hop_s;

    let run_batch = || {
        for i in 0..batch_size {
            let seed = spec.seed.wrapping_add(i as u64);
            synth_frames(model, stats, spec, seed).expect("workload validated above");
        }
    };
    let batch_s = median_seconds(WARMUP_RUNS, n_batches, run_batch);
    let utterances_per_s = batch_size as f64 / batch_s;
    Ok(Throughput {
        utterances_per_s,
        audio_seconds_per_s: utterances_per_s * audio_s,
    })
}

/// Wall-clock seconds spent per second of audio produced. Below 1.0 is
/// faster than real time.
pub fn rtf_value(wall_s: f64, audio_s: f64) -> f64 {
    wall_s / audio_s
}

/// Real-time factor of single-utterance synthesis: median wall time divided
/// by the audio duration of the produced mel.
pub fn measure_rtf(model: &Model, stats: &MelStats, spec: &SynthSpec) -> Result<f64, BenchError> {
    let frames = synth_frames(model, stats, spec, spec.seed)?;
    let audio_s = frames as f64 * spec.frame_hop_s;
    let wall_s = median_seconds(WARMUP_RUNS, TIMED_RUNS, || {
        synth_frames(model, stats, spec, spec.seed).expect("workload validated above");
    });
    Ok(rtf_value(wall_s, audio_s))
}

/// Peak heap footprint of synthesizing one batch: the model's resident
/// parameter bytes plus the transient high-water mark of the batch loop.
/// Requires the counting allocator.
pub fn measure_peak_memory(
    model: &mut Model,
    stats: &MelStats,
    spec: &SynthSpec,
    batch_size: usize,
) -> Result<usize, BenchError> {
    if batch_size == 0 {
        return Err(BenchError::ZeroBatch);
    }
    if !allocator_active() {
        return Err(BenchError::AllocatorInactive);
    }
    let param_bytes = param_count(model) * std::mem::size_of::<f64>();
    // Warm run flushes one-time lazy allocations out of the measurement.
    synth_frames(model, stats, spec, spec.seed)?;
    let (_, transient) = transient_peak(|| {
        for i in 0..batch_size {
            let seed = spec.seed.wrapping_add(i as u64);
            let frames =
                synth_frames(model, stats, spec, seed).expect("workload validated above");
            std::hint::black_box(frames);
        }
    });
    Ok(param_bytes + transient)
}

/// Transient peak heap of one mixing-layer forward pass at the given width
/// and length, input allocation included. This isolates how the sequence
/// mixer itself scales, without encoder/decoder overhead around it.
pub fn measure_layer_peak<F: Real>(
    kind: MixerKind,
    dim: usize,
    seq_len: usize,
) -> Result<usize, BenchError> {
    if !allocator_active() {
        return Err(BenchError::AllocatorInactive);
    }
    let mut rng = Prng::seed(11);
    let layer = Mixer::<F>::new(kind, dim, &mut rng);
    let run = || {
        let mut rng = Prng::seed(12);
        let x: Array2<F> = rng.normal_array2((seq_len, dim), 1.0);
        let (y, _) = layer.forward(x.view(), false);
        std::hint::black_box(y.len());
    };
    run(); // warm-up: one-time lazy allocations stay out of the peak
    let (_, peak) = transient_peak(run);
    Ok(peak)
}

/// Order-sensitive hash of every parameter's exact bits. Two calls bracket a
/// measurement to prove it never wrote to the model.
pub fn param_checksum<F: Real, M: Module<F> + ?Sized>(m: &mut M) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    m.for_each_param("", &mut |_, t| {
        for v in t.v.iter() {
            h ^= v.as_f64().to_bits();
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    });
    h
}
