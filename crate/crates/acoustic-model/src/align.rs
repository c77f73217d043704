//! Monotonic alignment between token-level Gaussian means and mel frames.
//!
//! A Viterbi pass over the frame log-likelihood table finds the monotonic,
//! surjective token→frame segmentation with the highest total score; the
//! segmentation is returned as per-token frame counts.

use ndarray::Array2;

use crate::error::ModelError;

/// Log-likelihood of frame `t` under token `l`'s unit-variance Gaussian,
/// up to a constant shared by all cells.
pub fn frame_log_likelihoods(mu: &Array2<f64>, mel: &Array2<f64>) -> Array2<f64> {
    let (l_tokens, channels) = mu.dim();
    let (mel_channels, t_frames) = mel.dim();
    assert_eq!(channels, mel_channels, "channel count mismatch");
    Array2::from_shape_fn((l_tokens, t_frames), |(l, t)| {
        let mut acc = 0.0;
        for c in 0..channels {
            let d = mel[[c, t]] - mu[[l, c]];
            acc -= 0.5 * d * d;
        }
        acc
    })
}

/// Highest-scoring monotonic segmentation of `ll` (tokens × frames).
/// Every token receives at least one frame and the counts sum to the frame
/// total.
pub fn align_durations(ll: &Array2<f64>) -> Result<Vec<usize>, ModelError> {
    let (l_tokens, t_frames) = ll.dim();
    if l_tokens == 0 {
        return Err(ModelError::EmptyTokens);
    }
    if l_tokens > t_frames {
        return Err(ModelError::AlignTooLong {
            tokens: l_tokens,
            frames: t_frames,
        });
    }

    // score[l][t]: best total for tokens 0..=l over frames 0..=t with token
    // l owning frame t. `advance[l][t]` records whether the path stepped in
    // from the previous token.
    let mut score = Array2::from_elem((l_tokens, t_frames), f64::NEG_INFINITY);
    let mut advance = Array2::from_elem((l_tokens, t_frames), false);
    score[[0, 0]] = ll[[0, 0]];
    for t in 1..t_frames {
        let top = l_tokens.min(t + 1);
        for l in 0..top {
            let stay = score[[l, t - 1]];
            let step = if l > 0 {
                score[[l - 1, t - 1]]
            } else {
                f64::NEG_INFINITY
            };
            let best = stay.max(step);
            if best.is_finite() {
                score[[l, t]] = ll[[l, t]] + best;
                advance[[l, t]] = step > stay;
            }
        }
    }

    let mut durations = vec![0usize; l_tokens];
    let mut l = l_tokens - 1;
    for t in (0..t_frames).rev() {
        durations[l] += 1;
        if t > 0 && advance[[l, t]] {
            l -= 1;
        }
    }
    debug_assert_eq!(l, 0, "path must start at the first token");
    Ok(durations)
}

/// Aligns mel frames to tokens by their Gaussian likelihood under `mu`.
pub fn monotonic_align(mu: &Array2<f64>, mel: &Array2<f64>) -> Result<Vec<usize>, ModelError> {
    align_durations(&frame_log_likelihoods(mu, mel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nnet::Prng;
    use seqmix::oracle::best_monotonic_durations;

    #[test]
    fn sharp_diagonal_with_square_table_forces_unit_durations() {
        let n = 4;
        let ll = Array2::from_shape_fn((n, n), |(l, t)| if l == t { 0.0 } else { -100.0 });
        assert_eq!(align_durations(&ll).unwrap(), vec![1; n]);
    }

    #[test]
    fn hand_table_matches_the_exhaustive_oracle() {
        let ll = Array2::from_shape_vec(
            (3, 5),
            vec![
                0.0, -1.0, -4.0, -9.0, -9.0, //
                -5.0, -0.5, -0.2, -3.0, -8.0, //
                -9.0, -7.0, -2.0, -0.1, -0.3,
            ],
        )
        .unwrap();
        let got = align_durations(&ll).unwrap();
        assert_eq!(got, best_monotonic_durations(&ll));
        assert_eq!(got.iter().sum::<usize>(), 5);
    }

    #[test]
    fn random_tables_match_the_exhaustive_oracle() {
        let mut rng = Prng::seed(21);
        for _ in 0..40 {
            let l = 1 + rng.below(4);
            let t = l + rng.below(5);
            let ll = rng.normal_array2::<f64>((l, t), 2.0);
            let got = align_durations(&ll).unwrap();
            let want = best_monotonic_durations(&ll);
            let total = |d: &[usize]| -> f64 {
                let mut s = 0.0;
                let mut frame = 0;
                for (i, &n) in d.iter().enumerate() {
                    for _ in 0..n {
                        s += ll[[i, frame]];
                        frame += 1;
                    }
                }
                s
            };
            // Scores must agree exactly; ties may pick different paths.
            assert!(
                (total(&got) - total(&want)).abs() < 1e-9,
                "{got:?} vs {want:?}"
            );
            assert_eq!(got.iter().sum::<usize>(), t);
            assert!(got.iter().all(|&d| d >= 1));
        }
    }

    #[test]
    fn frame_permutation_keeps_the_sum_constraint() {
        let mut rng = Prng::seed(22);
        let mu = rng.normal_array2::<f64>((3, 6), 1.0);
        let mel = rng.normal_array2::<f64>((6, 9), 1.0);
        let base = monotonic_align(&mu, &mel).unwrap();

        let mut cols: Vec<usize> = (0..9).collect();
        cols.reverse();
        let permuted = Array2::from_shape_fn((6, 9), |(c, t)| mel[[c, cols[t]]]);
        let shuffled = monotonic_align(&mu, &permuted).unwrap();

        assert_eq!(base.iter().sum::<usize>(), 9);
        assert_eq!(shuffled.iter().sum::<usize>(), 9);
        assert_ne!(base, shuffled);
    }

    #[test]
    fn more_tokens_than_frames_is_an_error() {
        let ll = Array2::zeros((5, 3));
        assert!(matches!(
            align_durations(&ll),
            Err(ModelError::AlignTooLong { tokens: 5, frames: 3 })
        ));
    }

    #[test]
    fn empty_token_axis_is_an_error() {
        let ll = Array2::zeros((0, 3));
        assert!(matches!(align_durations(&ll), Err(ModelError::EmptyTokens)));
    }
}
