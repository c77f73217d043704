//! Band-limited sample-rate conversion with a windowed-sinc kernel.

use crate::wave::Waveform;

/// Zero crossings of the sinc kept on each side of the kernel center.
const KERNEL_CROSSINGS: f64 = 32.0;

/// Resamples to `target_rate` by windowed-sinc interpolation.
///
/// The low-pass cutoff is the smaller of the two Nyquist frequencies, so
/// downsampling band-limits before decimation. Equal rates return a copy.
pub fn resample(w: &Waveform, target_rate: u32) -> Waveform {
    assert!(target_rate > 0, "target rate must be positive");
    if target_rate == w.sample_rate {
        return w.clone();
    }
    let ratio = f64::from(target_rate) / f64::from(w.sample_rate);
    let out_len = (w.samples.len() as f64 * ratio).round() as usize;
    // Cutoff as a fraction of the input Nyquist frequency.
    let cutoff = ratio.min(1.0);
    let half_width = KERNEL_CROSSINGS / cutoff;

    let x = &w.samples;
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let t = j as f64 / ratio;
        let lo = (t - half_width).ceil().max(0.0) as usize;
        let hi = ((t + half_width).floor() as usize).min(x.len().saturating_sub(1));
        let mut acc = 0.0;
        for (i, &xi) in x.iter().enumerate().take(hi + 1).skip(lo) {
            acc += xi * kernel(t - i as f64, cutoff, half_width);
        }
        out.push(acc);
    }
    Waveform::new(out, target_rate)
}

fn kernel(u: f64, cutoff: f64, half_width: f64) -> f64 {
    if u.abs() >= half_width {
        return 0.0;
    }
    cutoff * sinc(cutoff * u) * blackman(u / half_width)
}

fn sinc(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        1.0
    } else {
        let p = std::f64::consts::PI * v;
        p.sin() / p
    }
}

/// Blackman window on [-1, 1], zero at the edges, one at the center.
fn blackman(s: f64) -> f64 {
    let p = std::f64::consts::PI * s;
    0.42 + 0.5 * p.cos() + 0.08 * (2.0 * p).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex;
    use rustfft::FftPlanner;

    fn sine(freq: f64, rate: u32, len: usize) -> Waveform {
        let samples = (0..len)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / f64::from(rate)).sin())
            .collect();
        Waveform::new(samples, rate)
    }

    fn dominant_bin(samples: &[f64]) -> usize {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(samples.len());
        let n = samples.len() as f64;
        let mut buf: Vec<Complex<f64>> = samples
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                // Hann taper keeps spectral leakage from edge transients low.
                let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n).cos());
                Complex::new(s * w, 0.0)
            })
            .collect();
        fft.process(&mut buf);
        (1..samples.len() / 2)
            .max_by(|a, b| buf[*a].norm().total_cmp(&buf[*b].norm()))
            .unwrap()
    }

    #[test]
    fn equal_rates_return_identical_samples() {
        let w = sine(440.0, 22050, 1000);
        let r = resample(&w, 22050);
        assert_eq!(r.samples, w.samples);
    }

    #[test]
    fn halving_the_rate_halves_the_length() {
        let w = Waveform::new(vec![0.0; 44100], 44100);
        let r = resample(&w, 22050);
        assert!((r.len() as i64 - 22050).abs() <= 1);
        assert_eq!(r.sample_rate, 22050);
    }

    #[test]
    fn tone_frequency_survives_downsampling() {
        let w = sine(1000.0, 44100, 44100);
        let r = resample(&w, 22050);
        // One second at 22050 Hz puts bin k at k Hz.
        let bin = dominant_bin(&r.samples);
        assert!(
            (bin as i64 - 1000).abs() <= 1,
            "peak at {bin} Hz, wanted 1000 Hz"
        );
    }

    #[test]
    fn up_then_down_reproduces_band_limited_input() {
        let rate = 22050;
        let n = 8192;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / f64::from(rate);
                0.5 * (2.0 * std::f64::consts::PI * 500.0 * t).sin()
                    + 0.3 * (2.0 * std::f64::consts::PI * 1500.0 * t).sin()
            })
            .collect();
        let w = Waveform::new(samples, rate);
        let round = resample(&resample(&w, 44100), rate);
        assert_eq!(round.len(), w.len());

        let margin = 256;
        let mut err = 0.0;
        let mut sig = 0.0;
        for i in margin..w.len() - margin {
            err += (round.samples[i] - w.samples[i]).powi(2);
            sig += w.samples[i].powi(2);
        }
        let rel_db = 10.0 * (err / sig).log10();
        assert!(rel_db < -40.0, "round-trip error {rel_db:.1} dB");
    }

    #[test]
    fn silence_stays_silent() {
        let w = Waveform::new(vec![0.0; 4000], 16000);
        let r = resample(&w, 22050);
        assert!(r.samples.iter().all(|&s| s == 0.0));
    }
}
