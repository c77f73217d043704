//! Short-time Fourier analysis with centered frames and reflection padding,
//! plus the overlap-add inverse used for reconstruction.

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Periodic Hann window.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos()))
        .collect()
}

/// Reflection padding without repeating the edge sample.
fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    assert!(
        pad < x.len(),
        "reflection pad {pad} needs more than {} samples",
        x.len()
    );
    let mut out = Vec::with_capacity(x.len() + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((0..pad).map(|i| x[x.len() - 2 - i]));
    out
}

/// Frame count for a centered analysis of `len` samples.
pub fn frame_count(len: usize, hop: usize) -> usize {
    len / hop + 1
}

pub(crate) struct StftPlan {
    n_fft: usize,
    win: usize,
    hop: usize,
    window: Vec<f64>,
}

impl StftPlan {
    pub fn new(n_fft: usize, win: usize, hop: usize) -> Self {
        assert!(hop <= win && win <= n_fft, "need hop <= win <= n_fft");
        Self {
            n_fft,
            win,
            hop,
            window: hann_window(win),
        }
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Complex spectra of centered, windowed frames: shape (bins, T).
    pub fn forward(&self, x: &[f64]) -> Array2<Complex<f64>> {
        let pad = self.n_fft / 2;
        let padded = reflect_pad(x, pad);
        let frames = frame_count(x.len(), self.hop);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(self.n_fft);

        let mut spec = Array2::zeros((self.bins(), frames));
        let mut buf = vec![Complex::new(0.0, 0.0); self.n_fft];
        let offset = (self.n_fft - self.win) / 2;
        for t in 0..frames {
            buf.fill(Complex::new(0.0, 0.0));
            let start = t * self.hop;
            for n in 0..self.win {
                buf[offset + n] = Complex::new(padded[start + offset + n] * self.window[n], 0.0);
            }
            fft.process(&mut buf);
            for (k, v) in buf.iter().take(self.bins()).enumerate() {
                spec[[k, t]] = *v;
            }
        }
        spec
    }

    /// Overlap-add inverse of `forward`; returns (T - 1) * hop samples.
    pub fn inverse(&self, spec: &Array2<Complex<f64>>) -> Vec<f64> {
        assert_eq!(spec.nrows(), self.bins(), "bin count mismatch");
        let frames = spec.ncols();
        assert!(frames >= 1, "need at least one frame");
        let pad = self.n_fft / 2;
        let full_len = (frames - 1) * self.hop + self.n_fft;

        let mut planner = FftPlanner::new();
        let ifft = planner.plan_fft_inverse(self.n_fft);
        let mut acc = vec![0.0; full_len];
        let mut norm = vec![0.0; full_len];
        let mut buf = vec![Complex::new(0.0, 0.0); self.n_fft];
        let offset = (self.n_fft - self.win) / 2;
        for t in 0..frames {
            for k in 0..self.bins() {
                buf[k] = spec[[k, t]];
            }
            for k in self.bins()..self.n_fft {
                buf[k] = spec[[self.n_fft - k, t]].conj();
            }
            ifft.process(&mut buf);
            let start = t * self.hop;
            for n in 0..self.win {
                let v = buf[offset + n].re / self.n_fft as f64;
                acc[start + offset + n] += v * self.window[n];
                norm[start + offset + n] += self.window[n] * self.window[n];
            }
        }

        let out_len = (frames - 1) * self.hop;
        (0..out_len)
            .map(|i| acc[pad + i] / norm[pad + i].max(1e-8))
            .collect()
    }
}

/// Magnitude spectrogram of centered frames: shape (n_fft/2 + 1, T).
pub fn stft_magnitude(x: &[f64], n_fft: usize, win: usize, hop: usize) -> Array2<f64> {
    StftPlan::new(n_fft, win, hop).forward(x).mapv(|c| c.norm())
}
