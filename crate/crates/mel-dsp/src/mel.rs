//! Log-mel spectrogram extraction with a peak-one triangular filterbank.

use ndarray::Array2;

use crate::error::DspError;
use crate::stft::stft_magnitude;
use crate::wave::Waveform;

#[derive(Debug, Clone, PartialEq)]
pub struct MelConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub win: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            sample_rate: 22050,
            n_fft: 1024,
            win: 1024,
            hop: 256,
            n_mels: 80,
            fmin: 0.0,
            fmax: 8000.0,
            log_floor: 1e-5,
        }
    }
}

impl MelConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        if !(self.hop <= self.win && self.win <= self.n_fft) {
            return Err(DspError::Config(format!(
                "need hop <= win <= n_fft, got {} / {} / {}",
                self.hop, self.win, self.n_fft
            )));
        }
        let nyquist = f64::from(self.sample_rate) / 2.0;
        if !(0.0 <= self.fmin && self.fmin < self.fmax && self.fmax <= nyquist) {
            return Err(DspError::Config(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got {} / {}",
                self.fmin, self.fmax
            )));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return Err(DspError::Config("log floor must be positive".into()));
        }
        if self.n_mels == 0 || self.hop == 0 {
            return Err(DspError::Config("band and hop counts must be positive".into()));
        }
        Ok(())
    }

    /// Center frequencies of the mel bands in Hz.
    pub fn band_centers(&self) -> Vec<f64> {
        let lo = hz_to_mel(self.fmin);
        let hi = hz_to_mel(self.fmax);
        (1..=self.n_mels)
            .map(|m| mel_to_hz(lo + (hi - lo) * m as f64 / (self.n_mels + 1) as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    /// Log-magnitudes, shape (n_mels, T).
    pub values: Array2<f64>,
    pub config: MelConfig,
}

impl MelSpectrogram {
    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10.0_f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters on a mel-spaced grid, each peaking at one.
/// Shape: (n_mels, n_fft/2 + 1).
pub fn mel_filterbank(cfg: &MelConfig) -> Array2<f64> {
    let bins = cfg.n_fft / 2 + 1;
    let lo = hz_to_mel(cfg.fmin);
    let hi = hz_to_mel(cfg.fmax);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();

    let mut fb = Array2::zeros((cfg.n_mels, bins));
    let df = f64::from(cfg.sample_rate) / cfg.n_fft as f64;
    for m in 0..cfg.n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..bins {
            let f = k as f64 * df;
            let rise = (f - left) / (center - left);
            let fall = (right - f) / (right - center);
            let w = rise.min(fall);
            if w > 0.0 {
                fb[[m, k]] = w.min(1.0);
            }
        }
    }
    fb
}

/// Log-mel analysis: `log(max(filterbank · |STFT|, floor))`, shape (n_mels, T).
pub fn melspectrogram(w: &Waveform, cfg: &MelConfig) -> Result<MelSpectrogram, DspError> {
    cfg.validate()?;
    if w.sample_rate != cfg.sample_rate {
        return Err(DspError::RateMismatch {
            got: w.sample_rate,
            want: cfg.sample_rate,
        });
    }
    if w.len() < cfg.win {
        return Err(DspError::ShortWaveform {
            len: w.len(),
            win: cfg.win,
        });
    }
    w.check_finite("mel analysis")?;

    let mag = stft_magnitude(&w.samples, cfg.n_fft, cfg.win, cfg.hop);
    let fb = mel_filterbank(cfg);
    let values = fb.dot(&mag).mapv(|v| v.max(cfg.log_floor).ln());
    Ok(MelSpectrogram {
        values,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sine(freq: f64, rate: u32, len: usize) -> Waveform {
        let samples = (0..len)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / f64::from(rate)).sin())
            .collect();
        Waveform::new(samples, rate)
    }

    #[test]
    fn filters_peak_at_one_and_tile_the_band() {
        let cfg = MelConfig::default();
        let fb = mel_filterbank(&cfg);
        assert_eq!(fb.dim(), (80, 513));
        for m in 0..cfg.n_mels {
            let peak = fb.row(m).iter().fold(0.0f64, |a, &b| a.max(b));
            assert!(peak > 0.0, "band {m} is empty");
            assert!(peak <= 1.0 + 1e-12);
        }
        // Mid-band triangles hit their peak exactly.
        let peak40 = fb.row(40).iter().fold(0.0f64, |a, &b| a.max(b));
        assert!(peak40 > 0.9);
    }

    #[test]
    fn one_second_yields_87_frames() {
        let cfg = MelConfig::default();
        let w = sine(440.0, 22050, 22050);
        let m = melspectrogram(&w, &cfg).unwrap();
        assert_eq!(m.values.dim(), (80, 87));
    }

    #[test]
    fn silence_sits_on_the_log_floor() {
        let cfg = MelConfig::default();
        let w = Waveform::new(vec![0.0; 22050], 22050);
        let m = melspectrogram(&w, &cfg).unwrap();
        let floor = cfg.log_floor.ln();
        assert!(m.values.iter().all(|&v| v == floor));
    }

    #[test]
    fn tone_at_a_band_center_dominates_that_band() {
        let cfg = MelConfig::default();
        let centers = cfg.band_centers();
        let band = 40;
        let w = sine(centers[band], 22050, 22050);
        let m = melspectrogram(&w, &cfg).unwrap();
        for t in 0..m.n_frames() {
            let top = (0..cfg.n_mels)
                .max_by(|a, b| m.values[[*a, t]].total_cmp(&m.values[[*b, t]]))
                .unwrap();
            assert_eq!(top, band, "frame {t} peaked at band {top}");
        }
    }

    #[test]
    fn waveform_shorter_than_a_window_is_rejected() {
        let cfg = MelConfig::default();
        let w = Waveform::new(vec![0.0; 1023], 22050);
        assert!(matches!(
            melspectrogram(&w, &cfg),
            Err(DspError::ShortWaveform { len: 1023, win: 1024 })
        ));
    }

    #[test]
    fn mismatched_rate_is_rejected() {
        let cfg = MelConfig::default();
        let w = Waveform::new(vec![0.0; 44100], 44100);
        assert!(matches!(
            melspectrogram(&w, &cfg),
            Err(DspError::RateMismatch { got: 44100, want: 22050 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn frame_count_follows_the_centered_formula(len in 1024usize..6000) {
            let cfg = MelConfig::default();
            let w = Waveform::new(vec![0.1; len], 22050);
            let m = melspectrogram(&w, &cfg).unwrap();
            prop_assert_eq!(m.n_frames(), len / cfg.hop + 1);
        }

        #[test]
        fn amplification_never_lowers_a_log_mel_entry(seed in 0u64..1000, gain in 1.01f64..8.0) {
            let cfg = MelConfig::default();
            let samples: Vec<f64> = (0..3000)
                .map(|i| {
                    let x = (i as u64).wrapping_mul(6364136223846793005).wrapping_add(seed);
                    ((x >> 33) as f64 / (1u64 << 31) as f64 - 0.5) * 0.2
                })
                .collect();
            let quiet = Waveform::new(samples.clone(), 22050);
            let loud = Waveform::new(samples.iter().map(|s| s * gain).collect(), 22050);
            let a = melspectrogram(&quiet, &cfg).unwrap();
            let b = melspectrogram(&loud, &cfg).unwrap();
            for (x, y) in a.values.iter().zip(b.values.iter()) {
                prop_assert!(y >= &(x - 1e-12));
            }
        }
    }
}
