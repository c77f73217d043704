//! Griffin–Lim phase reconstruction from a log-mel spectrogram.
//!
//! The mel is mapped back to a linear magnitude spectrogram with a
//! pseudo-inverse of the filterbank (clamped at zero), then phases are
//! recovered by alternating projections between the time and frequency
//! domains.

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use crate::error::DspError;
use crate::mel::{mel_filterbank, MelSpectrogram};
use crate::stft::StftPlan;
use crate::wave::Waveform;

/// Reconstructs a waveform of length `(T - 1) * hop` from a log-mel.
///
/// Deterministic for a fixed `seed`; the output peak is limited to one.
pub fn griffin_lim_invert(
    m: &MelSpectrogram,
    iterations: usize,
    seed: u64,
) -> Result<Waveform, DspError> {
    assert!(iterations >= 1, "need at least one iteration");
    if !m.values.iter().all(|v| v.is_finite()) {
        return Err(DspError::NonFinite {
            context: "griffin-lim input",
        });
    }
    let cfg = &m.config;
    cfg.validate()?;

    let magnitude = mel_to_linear(m);
    let plan = StftPlan::new(cfg.n_fft, cfg.win, cfg.hop);
    let (bins, frames) = magnitude.dim();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phase = Array2::from_shape_fn((bins, frames), |_| {
        rng.gen::<f64>() * 2.0 * std::f64::consts::PI
    });
    // DC and Nyquist rows of a real signal's spectrum are real.
    for t in 0..frames {
        phase[[0, t]] = 0.0;
        phase[[bins - 1, t]] = 0.0;
    }

    for _ in 0..iterations {
        let spec = compose(&magnitude, &phase);
        let estimate = plan.forward(&plan.inverse(&spec));
        phase = estimate.mapv(|c| if c.norm() > 0.0 { c.arg() } else { 0.0 });
    }
    let mut samples = plan.inverse(&compose(&magnitude, &phase));

    let peak = samples.iter().fold(0.0f64, |a, &s| a.max(s.abs()));
    if peak > 1.0 {
        let scale = 0.99 / peak;
        for s in &mut samples {
            *s *= scale;
        }
    }
    Ok(Waveform::new(samples, cfg.sample_rate))
}

fn compose(magnitude: &Array2<f64>, phase: &Array2<f64>) -> Array2<Complex<f64>> {
    let mut spec = Array2::zeros(magnitude.dim());
    for ((idx, &mag), &ph) in magnitude.indexed_iter().zip(phase.iter()) {
        spec[idx] = Complex::from_polar(mag, ph);
    }
    spec
}

/// Least-squares mel-to-linear projection, clamped to non-negative.
fn mel_to_linear(m: &MelSpectrogram) -> Array2<f64> {
    let cfg = &m.config;
    let fb = mel_filterbank(cfg);
    let (n_mels, bins) = fb.dim();
    let fb_na = DMatrix::from_fn(n_mels, bins, |r, c| fb[[r, c]]);
    let pinv = fb_na
        .pseudo_inverse(1e-10)
        .expect("filterbank pseudo-inverse");

    let energy = m.values.mapv(f64::exp);
    let frames = energy.ncols();
    let mut linear = Array2::zeros((bins, frames));
    for t in 0..frames {
        for k in 0..bins {
            let mut acc = 0.0;
            for b in 0..n_mels {
                acc += pinv[(k, b)] * energy[[b, t]];
            }
            linear[[k, t]] = acc.max(0.0);
        }
    }
    linear
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mel::{melspectrogram, MelConfig};

    fn sine(freq: f64, rate: u32, len: usize) -> Waveform {
        let samples = (0..len)
            .map(|i| {
                0.6 * (2.0 * std::f64::consts::PI * freq * i as f64 / f64::from(rate)).sin()
            })
            .collect();
        Waveform::new(samples, rate)
    }

    #[test]
    fn output_length_is_hop_times_frames_minus_one() {
        let cfg = MelConfig::default();
        let m = MelSpectrogram {
            values: Array2::from_elem((80, 10), cfg.log_floor.ln()),
            config: cfg,
        };
        let w = griffin_lim_invert(&m, 1, 0).unwrap();
        assert_eq!(w.len(), 9 * 256);
    }

    #[test]
    fn floor_valued_mel_reconstructs_near_silence() {
        let cfg = MelConfig::default();
        let m = MelSpectrogram {
            values: Array2::from_elem((80, 20), cfg.log_floor.ln()),
            config: cfg,
        };
        let w = griffin_lim_invert(&m, 4, 7).unwrap();
        assert!(w.peak() < 0.01, "peak {}", w.peak());
    }

    #[test]
    fn tone_mel_reconstructs_the_tone_frequency() {
        let cfg = MelConfig::default();
        let w = sine(440.0, 22050, 22050);
        let m = melspectrogram(&w, &cfg).unwrap();
        let rec = griffin_lim_invert(&m, 32, 1).unwrap();

        // Peak-pick the averaged analysis spectrum of the reconstruction.
        let mag = crate::stft::stft_magnitude(&rec.samples, 1024, 1024, 256);
        let mean: Vec<f64> = (0..mag.nrows())
            .map(|k| mag.row(k).sum() / mag.ncols() as f64)
            .collect();
        let top = (1..mean.len())
            .max_by(|a, b| mean[*a].total_cmp(&mean[*b]))
            .unwrap();
        let df = 22050.0 / 1024.0;
        let freq = top as f64 * df;
        assert!(
            (freq - 440.0).abs() <= df,
            "reconstructed peak at {freq:.1} Hz"
        );
    }

    #[test]
    fn fixed_seed_reproduces_the_waveform_exactly() {
        let cfg = MelConfig::default();
        let w = sine(523.25, 22050, 8192);
        let m = melspectrogram(&w, &cfg).unwrap();
        let a = griffin_lim_invert(&m, 8, 42).unwrap();
        let b = griffin_lim_invert(&m, 8, 42).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn non_finite_mel_is_rejected() {
        let cfg = MelConfig::default();
        let mut values = Array2::from_elem((80, 5), -2.0);
        values[[3, 2]] = f64::INFINITY;
        let m = MelSpectrogram {
            values,
            config: cfg,
        };
        assert!(matches!(
            griffin_lim_invert(&m, 2, 0),
            Err(DspError::NonFinite { .. })
        ));
    }
}
