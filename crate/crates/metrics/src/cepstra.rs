//! Mel-cepstral analysis shared by the cepstral-distortion and Fréchet
//! metrics: log-mel frames projected onto an orthonormal cosine basis.

use mel_dsp::{melspectrogram, MelConfig, Waveform};
use ndarray::Array2;

use crate::error::MetricError;

/// Coefficients kept per frame (c0 through c12).
pub const N_CEPSTRA: usize = 13;

/// Orthonormal type-II cosine transform matrix, shape (n_out, n_in).
pub(crate) fn dct_matrix(n_out: usize, n_in: usize) -> Array2<f64> {
    let mut m = Array2::zeros((n_out, n_in));
    let norm0 = (1.0 / n_in as f64).sqrt();
    let norm = (2.0 / n_in as f64).sqrt();
    for k in 0..n_out {
        let alpha = if k == 0 { norm0 } else { norm };
        for n in 0..n_in {
            let angle = std::f64::consts::PI * k as f64 * (2 * n + 1) as f64 / (2 * n_in) as f64;
            m[[k, n]] = alpha * angle.cos();
        }
    }
    m
}

/// Mel-cepstral frames of a waveform, shape (T, 13) with c0 in column 0.
pub fn mel_cepstra(w: &Waveform) -> Result<Array2<f64>, MetricError> {
    let cfg = MelConfig {
        sample_rate: w.sample_rate,
        ..MelConfig::default()
    };
    let mel = melspectrogram(w, &cfg)?;
    let dct = dct_matrix(N_CEPSTRA, cfg.n_mels);
    Ok(dct.dot(&mel.values).t().to_owned())
}
