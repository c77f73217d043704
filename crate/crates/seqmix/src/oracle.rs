//! Brute-force reference implementations.
//!
//! Everything here is written with plain index loops, independently of the
//! production code paths, so the two routes can be compared in tests. Keep
//! these slow and obvious; do not "optimize" them.

use ndarray::Array2;

use crate::hydra::HydraParams;
use crate::ssd::SsdParams;

/// Largest elementwise deviation, relative for large magnitudes and absolute
/// near zero: |a-b| / max(1, |a|, |b|).
pub fn max_rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        let denom = 1.0f64.max(x.abs()).max(y.abs());
        worst = worst.max((x - y).abs() / denom);
    }
    worst
}

/// Step-by-step scalar recurrence: h_t = α_t h_{t-1} + B̄_t x_t, y_t = C_t h_t.
pub fn ssd_naive(x: &Array2<f64>, p: &SsdParams<f64>) -> Array2<f64> {
    let (l, d_in) = x.dim();
    let n = p.state_dim();
    let d_out = p.out_dim();
    let mut h = vec![0.0f64; n];
    let mut y = Array2::zeros((l, d_out));
    for t in 0..l {
        for s in 0..n {
            let mut acc = p.alpha[t] * h[s];
            for j in 0..d_in {
                acc += p.b_bar[[t, s, j]] * x[[t, j]];
            }
            h[s] = acc;
        }
        for o in 0..d_out {
            let mut acc = 0.0;
            for s in 0..n {
                acc += p.c[[t, o, s]] * h[s];
            }
            y[[t, o]] = acc;
        }
    }
    y
}

/// Linear-attention form, valid only when every decay is exactly 1:
/// y_t = C_t Σ_{s<=t} B̄_s x_s.
pub fn ssd_cumsum_alpha_one(x: &Array2<f64>, p: &SsdParams<f64>) -> Array2<f64> {
    let (l, d_in) = x.dim();
    let n = p.state_dim();
    let d_out = p.out_dim();
    assert!(p.alpha.iter().all(|a| *a == 1.0));
    let mut cum = vec![0.0f64; n];
    let mut y = Array2::zeros((l, d_out));
    for t in 0..l {
        for s in 0..n {
            for j in 0..d_in {
                cum[s] += p.b_bar[[t, s, j]] * x[[t, j]];
            }
        }
        for o in 0..d_out {
            let mut acc = 0.0;
            for s in 0..n {
                acc += p.c[[t, o, s]] * cum[s];
            }
            y[[t, o]] = acc;
        }
    }
    y
}

/// Composition of naive scans, index-level shift and flip:
/// y = shift(fwd(x)) + flip(shift(bwd(flip(x)))) + x·diag(d).
/// `p.bwd` is index-aligned with the *flipped* input, as in the fast path.
pub fn hydra_naive(x: &Array2<f64>, p: &HydraParams<f64>) -> Array2<f64> {
    let (l, d) = x.dim();
    let fwd = ssd_naive(x, &p.fwd);

    let mut x_rev = Array2::zeros((l, d));
    for t in 0..l {
        for j in 0..d {
            x_rev[[t, j]] = x[[l - 1 - t, j]];
        }
    }
    let bwd = ssd_naive(&x_rev, &p.bwd);

    let mut y = Array2::zeros((l, d));
    for t in 0..l {
        for j in 0..d {
            // shift: row t of the forward branch is the scan's row t-1.
            let f = if t > 0 { fwd[[t - 1, j]] } else { 0.0 };
            // flip∘shift∘(scan of flipped x): row t picks flipped-row l-1-t,
            // shifted to l-2-t.
            let bi = l as isize - 2 - t as isize;
            let b = if bi >= 0 { bwd[[bi as usize, j]] } else { 0.0 };
            y[[t, j]] = f + b + p.d[j] * x[[t, j]];
        }
    }
    y
}

/// Quadratic-time Fourier mixing oracle in the pure-real cosine form:
/// y[l,h] = Σ_{l',h'} cos(2π(l·l'/L + h·h'/H)) x[l',h'].
///
/// No complex arithmetic and no FFT — an entirely separate route from the
/// production implementation.
pub fn fnet_naive(x: &Array2<f64>) -> Array2<f64> {
    let (l_len, h_len) = x.dim();
    let mut y = Array2::zeros((l_len, h_len));
    for l in 0..l_len {
        for h in 0..h_len {
            let mut acc = 0.0;
            for lp in 0..l_len {
                for hp in 0..h_len {
                    let phase = 2.0
                        * std::f64::consts::PI
                        * ((l * lp) as f64 / l_len as f64 + (h * hp) as f64 / h_len as f64);
                    acc += phase.cos() * x[[lp, hp]];
                }
            }
            y[[l, h]] = acc;
        }
    }
    y
}

/// Softmax attention with explicit loops over heads and positions.
/// q: (Lq, D), k/v: (Lk, D) are already projected; returns the concatenated
/// head outputs before the output projection.
pub fn attention_core_naive(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    heads: usize,
) -> Array2<f64> {
    let (lq, d) = q.dim();
    let lk = k.shape()[0];
    assert_eq!(d % heads, 0);
    let hd = d / heads;
    let scale = 1.0 / (hd as f64).sqrt();
    let mut out = Array2::zeros((lq, d));
    for h in 0..heads {
        let off = h * hd;
        for i in 0..lq {
            // scores and stable softmax
            let mut scores = vec![0.0f64; lk];
            for (j, score) in scores.iter_mut().enumerate() {
                let mut acc = 0.0;
                for c in 0..hd {
                    acc += q[[i, off + c]] * k[[j, off + c]];
                }
                *score = acc * scale;
            }
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for s in scores.iter_mut() {
                *s = (*s - m).exp();
                z += *s;
            }
            for j in 0..lk {
                let w = scores[j] / z;
                for c in 0..hd {
                    out[[i, off + c]] += w * v[[j, off + c]];
                }
            }
        }
    }
    out
}

/// Monotonic-alignment oracle: enumerate every way to split T frames into L
/// contiguous positive-length segments and maximize the summed log-likelihood.
/// `ll` is (L, T). Only feasible for tiny L, T.
pub fn best_monotonic_durations(ll: &Array2<f64>) -> Vec<usize> {
    let (l, t) = ll.dim();
    assert!(l <= t, "need at least one frame per token");
    let mut best_score = f64::NEG_INFINITY;
    let mut best: Vec<usize> = Vec::new();
    let mut durs = vec![1usize; l];
    // Enumerate compositions of t into l positive parts.
    fn rec(
        ll: &Array2<f64>,
        durs: &mut Vec<usize>,
        idx: usize,
        remaining: usize,
        best_score: &mut f64,
        best: &mut Vec<usize>,
    ) {
        let l = durs.len();
        if idx == l - 1 {
            durs[idx] = remaining;
            let mut score = 0.0;
            let mut t0 = 0;
            for (i, &d) in durs.iter().enumerate() {
                for t in t0..t0 + d {
                    score += ll[[i, t]];
                }
                t0 += d;
            }
            if score > *best_score {
                *best_score = score;
                *best = durs.clone();
            }
            return;
        }
        let tokens_left = l - idx - 1;
        for d in 1..=(remaining - tokens_left) {
            durs[idx] = d;
            rec(ll, durs, idx + 1, remaining - d, best_score, best);
        }
    }
    rec(ll, &mut durs, 0, t, &mut best_score, &mut best);
    best
}

/// Direct DFT of a real signal (one dimension), returning (re, im) pairs.
/// Used to cross-check the FFT-based spectrogram path.
pub fn dft_naive(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut re = 0.0;
        let mut im = 0.0;
        for (t, &v) in x.iter().enumerate() {
            let ang = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        out.push((re, im));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotonic_oracle_prefers_obvious_alignment() {
        // 2 tokens, 4 frames; likelihood strongly favors splitting 1|3.
        let ll = ndarray::arr2(&[
            [0.0, -9.0, -9.0, -9.0],
            [-9.0, 0.0, 0.0, 0.0],
        ]);
        assert_eq!(best_monotonic_durations(&ll), vec![1, 3]);
    }

    #[test]
    fn dft_naive_matches_analytic_tone() {
        // A pure cosine at bin 3 of a 16-point DFT.
        let n = 16;
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 3.0 * t as f64 / n as f64).cos())
            .collect();
        let spec = dft_naive(&x);
        for (k, (re, im)) in spec.iter().enumerate() {
            let mag = (re * re + im * im).sqrt();
            if k == 3 || k == n - 3 {
                assert!((mag - n as f64 / 2.0).abs() < 1e-9, "bin {k} mag {mag}");
            } else {
                assert!(mag < 1e-9, "bin {k} mag {mag}");
            }
        }
    }

    #[test]
    fn attention_rows_are_convex_mixtures() {
        // With identical value rows the output must reproduce that row.
        let q = Array2::from_elem((3, 4), 0.7);
        let k = Array2::from_elem((5, 4), -0.2);
        let v = ndarray::Array2::from_shape_fn((5, 4), |(_, c)| c as f64);
        let out = attention_core_naive(&q, &k, &v, 2);
        for i in 0..3 {
            for c in 0..4 {
                assert!((out[[i, c]] - c as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fnet_naive_dc_input() {
        // Constant input concentrates on the (0,0) output only:
        // y[l,h] = Σ cos(...) which is L·H at (0,0) and 0 elsewhere.
        let x = Array2::from_elem((4, 3), 1.0);
        let y = fnet_naive(&x);
        assert!((y[[0, 0]] - 12.0).abs() < 1e-9);
        for l in 0..4 {
            for h in 0..3 {
                if l == 0 && h == 0 {
                    continue;
                }
                assert!(y[[l, h]].abs() < 1e-9, "at {l},{h}");
            }
        }
    }

    #[test]
    fn max_rel_err_blends_absolute_and_relative() {
        let a = ndarray::arr2(&[[1000.0, 0.0]]);
        let b = ndarray::arr2(&[[1001.0, 1e-9]]);
        let e = max_rel_err(&a, &b);
        assert!(e > 0.0009 && e < 0.0011);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn cumsum_form_requires_unit_decay() {
        let p = SsdParams {
            alpha: ndarray::arr1(&[1.0, 1.0, 1.0]),
            b_bar: ndarray::Array3::from_elem((3, 2, 1), 0.5),
            c: ndarray::Array3::from_elem((3, 1, 2), 1.0),
        };
        let x = ndarray::arr2(&[[1.0], [1.0], [1.0]]);
        let y = ssd_cumsum_alpha_one(&x, &p);
        // Running sum of B x: state grows by 1.0 per step in each of 2 dims.
        let expect = [1.0 * 2.0 * 0.5, 2.0 * 2.0 * 0.5, 3.0 * 2.0 * 0.5];
        for t in 0..3 {
            assert!((y[[t, 0]] - expect[t] * 1.0).abs() < 1e-12);
        }
    }
}
