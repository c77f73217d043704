//! Fréchet distance between Gaussian fits of pooled mel-cepstral frames of
//! two utterance sets.

use mel_dsp::Waveform;
use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;

use crate::cepstra::mel_cepstra;
use crate::error::MetricError;

fn gaussian_fit(frames: ArrayView2<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (n, d) = frames.dim();
    let mut mean = DVector::zeros(d);
    for row in frames.outer_iter() {
        for (k, &v) in row.iter().enumerate() {
            mean[k] += v;
        }
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for row in frames.outer_iter() {
        let centered = DVector::from_iterator(d, row.iter().copied()) - &mean;
        cov += &centered * centered.transpose();
    }
    cov /= (n - 1) as f64;
    (mean, cov)
}

/// Symmetric square root with eigenvalues clamped at zero.
fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let roots = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * roots * eig.eigenvectors.transpose()
}

/// Fréchet distance between Gaussians fitted to two frame sets (rows are
/// observations): squared mean gap plus the covariance transport term.
pub fn fid_from_frames(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64, MetricError> {
    for rows in [a.nrows(), b.nrows()] {
        if rows < 2 {
            return Err(MetricError::SmallSet { need: 2, got: rows });
        }
    }
    assert_eq!(a.ncols(), b.ncols(), "frame dimensions differ");
    let (mu_a, cov_a) = gaussian_fit(a);
    let (mu_b, cov_b) = gaussian_fit(b);
    let gap = &mu_a - &mu_b;

    let root_b = sym_sqrt(&cov_b);
    let inner = &root_b * &cov_a * &root_b;
    let cross_trace = sym_sqrt(&inner).trace();
    let fid = gap.norm_squared() + cov_a.trace() + cov_b.trace() - 2.0 * cross_trace;
    Ok(fid.max(0.0))
}

/// Pools 13-dimensional mel-cepstral frames per set and compares the fits.
/// Each set needs at least two utterances.
pub fn mfcc_fid(set_a: &[Waveform], set_b: &[Waveform]) -> Result<f64, MetricError> {
    for set in [set_a, set_b] {
        if set.len() < 2 {
            return Err(MetricError::SmallSet {
                need: 2,
                got: set.len(),
            });
        }
    }
    let pool = |set: &[Waveform]| -> Result<ndarray::Array2<f64>, MetricError> {
        let per: Vec<ndarray::Array2<f64>> =
            set.iter().map(mel_cepstra).collect::<Result<_, _>>()?;
        let total: usize = per.iter().map(|c| c.nrows()).sum();
        let d = per[0].ncols();
        let mut pooled = ndarray::Array2::zeros((total, d));
        let mut row = 0;
        for c in &per {
            pooled
                .slice_mut(ndarray::s![row..row + c.nrows(), ..])
                .assign(c);
            row += c.nrows();
        }
        Ok(pooled)
    };
    fid_from_frames(pool(set_a)?.view(), pool(set_b)?.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::TAU;

    fn tone(freq: f64, seconds: f64) -> Waveform {
        let sr = 22_050u32;
        let n = (seconds * sr as f64) as usize;
        let samples = (0..n)
            .map(|i| 0.4 * (TAU * freq * i as f64 / sr as f64).sin())
            .collect();
        Waveform::new(samples, sr)
    }

    /// Draws n samples of x = mu + L z with z standard normal.
    fn gaussian_frames(
        n: usize,
        mu: &[f64],
        l: &DMatrix<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Array2<f64> {
        let d = mu.len();
        let mut out = Array2::zeros((n, d));
        for mut row in out.outer_iter_mut() {
            let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
            let x = l * z;
            for k in 0..d {
                row[k] = mu[k] + x[k];
            }
        }
        out
    }

    fn mixing_matrix(d: usize) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(d, d);
        for i in 0..d {
            l[(i, i)] = 0.8 + 0.05 * i as f64;
            for j in 0..i {
                l[(i, j)] = 0.15 * ((i * 7 + j * 3) % 5) as f64 / 5.0;
            }
        }
        l
    }

    #[test]
    fn same_set_scores_zero() {
        let set = vec![tone(220.0, 0.6), tone(330.0, 0.6)];
        let got = mfcc_fid(&set, &set).unwrap();
        assert!(got < 1e-6, "{got}");
    }

    #[test]
    fn gaussian_mean_shift_recovers_its_squared_norm() {
        let d = 13;
        let n = 200_000;
        let l = mixing_matrix(d);
        let mu_a = vec![0.3; d];
        // Shift with squared norm 9.
        let shift = (9.0f64 / d as f64).sqrt();
        let mu_b: Vec<f64> = mu_a.iter().map(|m| m + shift).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let a = gaussian_frames(n, &mu_a, &l, &mut rng);
        let b = gaussian_frames(n, &mu_b, &l, &mut rng);
        let got = fid_from_frames(a.view(), b.view()).unwrap();
        assert!((got - 9.0).abs() < 0.09, "{got}");
    }

    #[test]
    fn distance_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let l = mixing_matrix(6);
        let a = gaussian_frames(500, &[0.0; 6], &l, &mut rng);
        let b = gaussian_frames(600, &[0.5; 6], &mixing_matrix(6), &mut rng);
        let x = fid_from_frames(a.view(), b.view()).unwrap();
        let y = fid_from_frames(b.view(), a.view()).unwrap();
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }

    #[test]
    fn mean_translation_strictly_increases_the_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let l = mixing_matrix(5);
        let a = gaussian_frames(400, &[0.0; 5], &l, &mut rng);
        let shifted = &a + 0.8;
        let base = fid_from_frames(a.view(), a.view()).unwrap();
        let moved = fid_from_frames(a.view(), shifted.view()).unwrap();
        assert!(moved > base + 1.0, "base {base}, moved {moved}");
    }

    #[test]
    fn never_negative_even_on_tiny_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2usize, 3, 5] {
            let a = gaussian_frames(n, &[0.0; 4], &mixing_matrix(4), &mut rng);
            let b = gaussian_frames(n, &[0.1; 4], &mixing_matrix(4), &mut rng);
            let got = fid_from_frames(a.view(), b.view()).unwrap();
            assert!(got >= 0.0);
        }
    }

    #[test]
    fn single_utterance_sets_error() {
        let set_a = vec![tone(220.0, 0.5)];
        let set_b = vec![tone(247.0, 0.5), tone(262.0, 0.5)];
        assert!(matches!(
            mfcc_fid(&set_a, &set_b),
            Err(MetricError::SmallSet { .. })
        ));
    }
}
