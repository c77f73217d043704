//! Mel-cepstral distortion with dynamic-time-warping alignment.

use mel_dsp::Waveform;
use ndarray::{s, Array2, ArrayView2};

use crate::cepstra::mel_cepstra;
use crate::error::MetricError;

/// Converts a natural-log cepstral Euclidean distance to decibels.
fn db_factor() -> f64 {
    10.0 * 2.0_f64.sqrt() / std::f64::consts::LN_10
}

fn frame_distance(a: ArrayView2<f64>, b: ArrayView2<f64>, i: usize, j: usize) -> f64 {
    let mut acc = 0.0;
    for k in 0..a.ncols() {
        let e = a[[i, k]] - b[[j, k]];
        acc += e * e;
    }
    acc.sqrt()
}

/// Minimum-total-cost monotone alignment; returns the summed distance along
/// the optimal path and the number of cells it visits.
pub(crate) fn dtw(a: ArrayView2<f64>, b: ArrayView2<f64>) -> (f64, usize) {
    let (ta, tb) = (a.nrows(), b.nrows());
    assert!(ta > 0 && tb > 0, "alignment needs frames on both sides");
    assert_eq!(a.ncols(), b.ncols(), "cepstral orders differ");
    let mut cost = Array2::<f64>::zeros((ta, tb));
    let mut steps = Array2::<usize>::zeros((ta, tb));
    for i in 0..ta {
        for j in 0..tb {
            let d = frame_distance(a, b, i, j);
            let (prev, n) = match (i, j) {
                (0, 0) => (0.0, 0),
                (0, _) => (cost[[0, j - 1]], steps[[0, j - 1]]),
                (_, 0) => (cost[[i - 1, 0]], steps[[i - 1, 0]]),
                _ => {
                    let diag = cost[[i - 1, j - 1]];
                    let up = cost[[i - 1, j]];
                    let left = cost[[i, j - 1]];
                    if diag <= up && diag <= left {
                        (diag, steps[[i - 1, j - 1]])
                    } else if up <= left {
                        (up, steps[[i - 1, j]])
                    } else {
                        (left, steps[[i, j - 1]])
                    }
                }
            };
            cost[[i, j]] = prev + d;
            steps[[i, j]] = n + 1;
        }
    }
    (cost[[ta - 1, tb - 1]], steps[[ta - 1, tb - 1]])
}

/// Distortion between cepstral frame matrices (one row per frame, c0 already
/// excluded): mean frame distance along the warped path, scaled to dB.
pub fn mcd_from_cepstra(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    let (total, len) = dtw(a, b);
    db_factor() * total / len as f64
}

/// Mel-cepstral distortion between two waveforms of equal sample rate,
/// computed over coefficients c1..c12.
pub fn mcd(a: &Waveform, b: &Waveform) -> Result<f64, MetricError> {
    if a.sample_rate != b.sample_rate {
        return Err(MetricError::RateMismatch {
            got: b.sample_rate,
            want: a.sample_rate,
        });
    }
    let ca = mel_cepstra(a)?;
    let cb = mel_cepstra(b)?;
    Ok(mcd_from_cepstra(
        ca.slice(s![.., 1..]),
        cb.slice(s![.., 1..]),
    ))
}
