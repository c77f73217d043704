//! Short-time objective intelligibility: clipped, normalized correlation of
//! one-third-octave band envelopes over 384 ms segments at 10 kHz.

use mel_dsp::{resample, Waveform};
use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::MetricError;

const RATE: u32 = 10_000;
const FRAME: usize = 256;
const HOP: usize = 128;
const N_FFT: usize = 512;
const N_BANDS: usize = 15;
const LOWEST_CENTER_HZ: f64 = 150.0;
/// Frames in one intelligibility segment (384 ms at 10 kHz).
const SEGMENT: usize = 30;
/// Frames more than this far below the loudest reference frame are dropped.
const DYN_RANGE_DB: f64 = 40.0;
/// Clip bound: the degraded envelope may exceed the reference by at most
/// 15 dB of signal-to-distortion ratio.
const SDR_BOUND_DB: f64 = 15.0;
const EPS: f64 = 1e-15;

/// Symmetric raised-cosine taper without zero endpoints.
fn taper(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let phase = std::f64::consts::TAU * (i + 1) as f64 / (len + 1) as f64;
            0.5 - 0.5 * phase.cos()
        })
        .collect()
}

fn frame_starts(len: usize) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut s = 0;
    while s + FRAME <= len {
        starts.push(s);
        s += HOP;
    }
    starts
}

/// Drops frames where the reference is more than 40 dB below its loudest
/// frame, rebuilding both signals by overlap-adding the kept frames.
fn remove_silent_frames(x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>), MetricError> {
    let w = taper(FRAME);
    let starts = frame_starts(x.len());
    if starts.is_empty() {
        return Err(MetricError::TooFewFrames {
            got: 0,
            need: SEGMENT,
        });
    }
    let energies: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let e: f64 = (0..FRAME).map(|i| (w[i] * x[s + i]).powi(2)).sum();
            20.0 * (e.sqrt() + EPS).log10()
        })
        .collect();
    let loudest = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energies)
        .filter(|(_, &e)| e > loudest - DYN_RANGE_DB)
        .map(|(&s, _)| s)
        .collect();
    if kept.is_empty() {
        return Err(MetricError::TooFewFrames {
            got: 0,
            need: SEGMENT,
        });
    }
    let out_len = (kept.len() - 1) * HOP + FRAME;
    let mut xs = vec![0.0; out_len];
    let mut ys = vec![0.0; out_len];
    for (slot, &s) in kept.iter().enumerate() {
        for i in 0..FRAME {
            xs[slot * HOP + i] += w[i] * x[s + i];
            ys[slot * HOP + i] += w[i] * y[s + i];
        }
    }
    Ok((xs, ys))
}

/// One-third-octave band envelopes, shape (bands, frames).
fn band_envelopes(x: &[f64]) -> Array2<f64> {
    let w = taper(FRAME);
    let starts = frame_starts(x.len());
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(N_FFT);
    let bins = N_FFT / 2 + 1;
    let mut power = Array2::zeros((bins, starts.len()));
    let mut buf = vec![Complex::new(0.0, 0.0); N_FFT];
    for (t, &s) in starts.iter().enumerate() {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < FRAME {
                Complex::new(w[i] * x[s + i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (k, value) in buf.iter().take(bins).enumerate() {
            power[[k, t]] = value.norm_sqr();
        }
    }

    let df = f64::from(RATE) / N_FFT as f64;
    let mut env = Array2::zeros((N_BANDS, starts.len()));
    for band in 0..N_BANDS {
        let center = LOWEST_CENTER_HZ * 2.0_f64.powf(band as f64 / 3.0);
        let lo = center * 2.0_f64.powf(-1.0 / 6.0);
        let hi = center * 2.0_f64.powf(1.0 / 6.0);
        for t in 0..starts.len() {
            let mut acc = 0.0;
            for k in 0..bins {
                let f = k as f64 * df;
                if f >= lo && f < hi {
                    acc += power[[k, t]];
                }
            }
            env[[band, t]] = acc.sqrt();
        }
    }
    env
}

fn centered_unit(values: &[f64]) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
    centered.iter().map(|v| v / (norm + EPS)).collect()
}

/// Intelligibility of `degraded` against `reference`, in [0, 1]-ish range
/// (negative correlations can pull segments slightly below zero).
pub fn stoi(reference: &Waveform, degraded: &Waveform) -> Result<f64, MetricError> {
    if reference.sample_rate != degraded.sample_rate {
        return Err(MetricError::RateMismatch {
            got: degraded.sample_rate,
            want: reference.sample_rate,
        });
    }
    let r = resample(reference, RATE);
    let d = resample(degraded, RATE);
    let n = r.len().min(d.len());
    let (rs, ds) = remove_silent_frames(&r.samples[..n], &d.samples[..n])?;
    let re = band_envelopes(&rs);
    let de = band_envelopes(&ds);
    let frames = re.ncols();
    if frames < SEGMENT {
        return Err(MetricError::TooFewFrames {
            got: frames,
            need: SEGMENT,
        });
    }

    let clip_gain = 1.0 + 10.0_f64.powf(SDR_BOUND_DB / 20.0);
    let mut acc = 0.0;
    let mut count = 0usize;
    for seg in 0..=frames - SEGMENT {
        for band in 0..N_BANDS {
            let x: Vec<f64> = (0..SEGMENT).map(|i| re[[band, seg + i]]).collect();
            let y: Vec<f64> = (0..SEGMENT).map(|i| de[[band, seg + i]]).collect();
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let alpha = (nx + EPS) / (ny + EPS);
            let clipped: Vec<f64> = x
                .iter()
                .zip(&y)
                .map(|(&xi, &yi)| (alpha * yi).min(clip_gain * xi))
                .collect();
            let xu = centered_unit(&x);
            let yu = centered_unit(&clipped);
            acc += xu.iter().zip(&yu).map(|(a, b)| a * b).sum::<f64>();
            count += 1;
        }
    }
    Ok(acc / count as f64)
}
