//! Fundamental-frequency tracking by cumulative-mean-normalized
//! autocorrelation differences, plus the F0 RMSE and voicing-F1 metrics
//! computed from the resulting tracks.

use mel_dsp::Waveform;

use crate::error::MetricError;

pub const PITCH_FMIN: f64 = 50.0;
pub const PITCH_FMAX: f64 = 550.0;
pub const PITCH_RATE: u32 = 22_050;
const WINDOW_MS: usize = 25;
const HOP_MS: usize = 10;
/// Frames whose normalized difference never dips below this stay unvoiced.
const VOICING_THRESHOLD: f64 = 0.15;
/// Frames quieter than this RMS are unvoiced outright.
const RMS_GATE: f64 = 1e-4;

/// Per-frame pitch estimates; `f0` is 0 exactly on unvoiced frames.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    pub f0: Vec<f64>,
    pub voicing: Vec<bool>,
    /// Seconds between frame starts.
    pub frame_hop: f64,
}

impl F0Track {
    /// Builds a track from raw per-frame values; 0 means unvoiced.
    pub fn from_f0(f0: Vec<f64>, frame_hop: f64) -> Self {
        let voicing = f0.iter().map(|&v| v > 0.0).collect();
        F0Track {
            f0,
            voicing,
            frame_hop,
        }
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.voicing.is_empty() {
            return 0.0;
        }
        self.voicing.iter().filter(|&&v| v).count() as f64 / self.voicing.len() as f64
    }
}

/// Per-frame pitch over 25 ms windows every 10 ms, searching 50–550 Hz.
pub fn extract_f0(w: &Waveform) -> Result<F0Track, MetricError> {
    if w.sample_rate != PITCH_RATE {
        return Err(MetricError::RateMismatch {
            got: w.sample_rate,
            want: PITCH_RATE,
        });
    }
    let sr = w.sample_rate as usize;
    let srf = w.sample_rate as f64;
    let win = sr * WINDOW_MS / 1000;
    let hop = sr * HOP_MS / 1000;
    let tau_min = (srf / PITCH_FMAX).ceil() as usize;
    let tau_max = (srf / PITCH_FMIN).floor() as usize;
    // Each frame needs `win` products at every lag up to tau_max + 1 (the
    // extra lag feeds the parabolic refinement).
    let span = win + tau_max + 1;
    let x = &w.samples;
    if x.len() < span {
        return Err(MetricError::ShortWaveform {
            len: x.len(),
            need: span,
        });
    }

    let mut f0 = Vec::new();
    let mut voicing = Vec::new();
    let mut diff = vec![0.0f64; tau_max + 2];
    let mut cmnd = vec![1.0f64; tau_max + 2];
    let mut start = 0;
    while start + span <= x.len() {
        let frame = &x[start..start + span];
        let rms = (frame[..win].iter().map(|v| v * v).sum::<f64>() / win as f64).sqrt();
        if rms < RMS_GATE {
            f0.push(0.0);
            voicing.push(false);
            start += hop;
            continue;
        }

        let mut cum = 0.0;
        for tau in 1..=tau_max + 1 {
            let mut d = 0.0;
            for j in 0..win {
                let e = frame[j] - frame[j + tau];
                d += e * e;
            }
            diff[tau] = d;
            cum += d;
            cmnd[tau] = if cum > 0.0 { d * tau as f64 / cum } else { 1.0 };
        }

        let mut pick = None;
        for tau in tau_min..=tau_max {
            if cmnd[tau] < VOICING_THRESHOLD {
                let mut t = tau;
                while t + 1 <= tau_max && cmnd[t + 1] < cmnd[t] {
                    t += 1;
                }
                pick = Some(t);
                break;
            }
        }

        match pick {
            Some(tau) => {
                let (dm, d0, dp) = (diff[tau - 1], diff[tau], diff[tau + 1]);
                let denom = dm - 2.0 * d0 + dp;
                let shift = if denom.abs() > 1e-12 {
                    (0.5 * (dm - dp) / denom).clamp(-1.0, 1.0)
                } else {
                    0.0
                };
                let hz = (srf / (tau as f64 + shift)).clamp(PITCH_FMIN, PITCH_FMAX);
                f0.push(hz);
                voicing.push(true);
            }
            None => {
                f0.push(0.0);
                voicing.push(false);
            }
        }
        start += hop;
    }

    Ok(F0Track {
        f0,
        voicing,
        frame_hop: hop as f64 / srf,
    })
}

/// RMSE in Hz over frames voiced in both tracks (up to the shorter track).
pub fn f0_rmse(a: &F0Track, b: &F0Track) -> Result<f64, MetricError> {
    let n = a.len().min(b.len());
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        if a.voicing[i] && b.voicing[i] {
            let e = a.f0[i] - b.f0[i];
            acc += e * e;
            count += 1;
        }
    }
    if count == 0 {
        return Err(MetricError::NoCoVoicedFrames);
    }
    Ok((acc / count as f64).sqrt())
}

/// F1 of the voicing decision with `truth`'s voicing as ground truth;
/// defined as 0 when precision and recall are both 0.
pub fn vuv_f1(truth: &F0Track, predicted: &F0Track) -> f64 {
    let n = truth.len().min(predicted.len());
    let (mut tp, mut fp, mut missed) = (0usize, 0usize, 0usize);
    for i in 0..n {
        match (truth.voicing[i], predicted.voicing[i]) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => missed += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + missed > 0 {
        tp as f64 / (tp + missed) as f64
    } else {
        0.0
    };
    if precision + recall == 0.0 {
        return 0.0;
    }
    2.0 * precision * recall / (precision + recall)
}
