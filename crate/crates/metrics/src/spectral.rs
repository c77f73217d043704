//! Log-amplitude spectral RMSE between two waveforms.

use mel_dsp::{stft_magnitude, Waveform};
use ndarray::s;

use crate::error::MetricError;

const N_FFT: usize = 1024;
const WIN: usize = 1024;
const HOP: usize = 256;
const LOG_FLOOR: f64 = 1e-10;

/// RMSE between floored base-10 log magnitude spectrograms, truncated to the
/// shorter signal's frame count.
pub fn las_rmse(a: &Waveform, b: &Waveform) -> Result<f64, MetricError> {
    if a.sample_rate != b.sample_rate {
        return Err(MetricError::RateMismatch {
            got: b.sample_rate,
            want: a.sample_rate,
        });
    }
    let shortest = a.len().min(b.len());
    if shortest < WIN {
        return Err(MetricError::ShortWaveform {
            len: shortest,
            need: WIN,
        });
    }
    let la = stft_magnitude(&a.samples, N_FFT, WIN, HOP).mapv(|m| m.max(LOG_FLOOR).log10());
    let lb = stft_magnitude(&b.samples, N_FFT, WIN, HOP).mapv(|m| m.max(LOG_FLOOR).log10());
    let t = la.ncols().min(lb.ncols());
    let d = &la.slice(s![.., ..t]) - &lb.slice(s![.., ..t]);
    Ok((d.mapv(|e| e * e).sum() / d.len() as f64).sqrt())
}
