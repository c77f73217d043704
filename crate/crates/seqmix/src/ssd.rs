//! Selective state-space scan with scalar per-step decay.
//!
//! State update h_t = α_t h_{t-1} + B̄_t x_t, readout y_t = C_t h_t. The
//! decay is a single scalar per step (diagonal transition α_t·I), which is
//! what makes the mixing matrix semiseparable and the scan linear in L.

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};
use nnet::Real;

/// Per-timestep parameters of one scan.
#[derive(Clone, Debug)]
pub struct SsdParams<F> {
    /// (L) decay in (0, 1].
    pub alpha: Array1<F>,
    /// (L, N, D_in) input maps.
    pub b_bar: Array3<F>,
    /// (L, D_out, N) readout maps.
    pub c: Array3<F>,
}

impl<F: Real> SsdParams<F> {
    pub fn seq_len(&self) -> usize {
        self.alpha.len()
    }

    pub fn state_dim(&self) -> usize {
        self.b_bar.shape()[1]
    }

    pub fn in_dim(&self) -> usize {
        self.b_bar.shape()[2]
    }

    pub fn out_dim(&self) -> usize {
        self.c.shape()[1]
    }

    fn check(&self, x: ArrayView2<F>) {
        let (l, d_in) = x.dim();
        assert_eq!(l, self.seq_len(), "alpha length vs sequence length");
        assert_eq!(d_in, self.in_dim(), "input width");
        assert_eq!(self.c.shape()[0], l, "C length vs sequence length");
        assert_eq!(self.c.shape()[2], self.state_dim(), "state width");
        assert!(
            self.alpha.iter().all(|a| a.is_finite() && *a >= F::zero()),
            "decay must be finite and non-negative"
        );
    }
}

/// x: (L, D_in) -> (L, D_out).
pub fn ssd_forward<F: Real>(x: ArrayView2<F>, p: &SsdParams<F>) -> Array2<F> {
    ssd_forward_cached(x, p).0
}

/// Forward pass that also returns the state history needed by [`ssd_vjp`].
pub fn ssd_forward_cached<F: Real>(x: ArrayView2<F>, p: &SsdParams<F>) -> (Array2<F>, Array2<F>) {
    p.check(x);
    let l = p.seq_len();
    let n = p.state_dim();
    let d_out = p.out_dim();
    let mut h = Array1::<F>::zeros(n);
    let mut h_hist = Array2::<F>::zeros((l, n));
    let mut y = Array2::<F>::zeros((l, d_out));
    for t in 0..l {
        let bt = p.b_bar.index_axis(Axis(0), t);
        let ct = p.c.index_axis(Axis(0), t);
        h *= p.alpha[t];
        h += &bt.dot(&x.row(t));
        h_hist.row_mut(t).assign(&h);
        y.row_mut(t).assign(&ct.dot(&h));
    }
    (y, h_hist)
}

/// Reverse-mode gradients of the scan. `h_hist` comes from
/// [`ssd_forward_cached`]. Returns (dx, parameter gradients).
pub fn ssd_vjp<F: Real>(
    x: ArrayView2<F>,
    p: &SsdParams<F>,
    h_hist: &Array2<F>,
    dy: &Array2<F>,
) -> (Array2<F>, SsdParams<F>) {
    p.check(x);
    let l = p.seq_len();
    let n = p.state_dim();
    let d_in = p.in_dim();
    let d_out = p.out_dim();
    assert_eq!(dy.dim(), (l, d_out));

    let mut dx = Array2::<F>::zeros((l, d_in));
    let mut d_alpha = Array1::<F>::zeros(l);
    let mut d_b = Array3::<F>::zeros((l, n, d_in));
    let mut d_c = Array3::<F>::zeros((l, d_out, n));

    // carry = α_{t+1} · λ_{t+1}, where λ_t = dL/dh_t.
    let mut carry = Array1::<F>::zeros(n);
    for t in (0..l).rev() {
        let bt = p.b_bar.index_axis(Axis(0), t);
        let ct = p.c.index_axis(Axis(0), t);
        let h_t = h_hist.row(t);
        let dy_t = dy.row(t);

        // dC_t = dy_t ⊗ h_t
        {
            let mut dct = d_c.index_axis_mut(Axis(0), t);
            for o in 0..d_out {
                let mut row = dct.row_mut(o);
                row.scaled_add(dy_t[o], &h_t);
            }
        }

        // λ_t = C_tᵀ dy_t + carry
        let lam = &ct.t().dot(&dy_t) + &carry;

        // dα_t = λ_t · h_{t-1}
        if t > 0 {
            d_alpha[t] = lam.dot(&h_hist.row(t - 1));
        }

        // dB̄_t = λ_t ⊗ x_t, dx_t = B̄_tᵀ λ_t
        {
            let mut dbt = d_b.index_axis_mut(Axis(0), t);
            let x_t = x.row(t);
            for s in 0..n {
                let mut row = dbt.row_mut(s);
                row.scaled_add(lam[s], &x_t);
            }
        }
        dx.row_mut(t).assign(&bt.t().dot(&lam));

        carry = lam * p.alpha[t];
    }

    (
        dx,
        SsdParams {
            alpha: d_alpha,
            b_bar: d_b,
            c: d_c,
        },
    )
}

/// Per-head scan shared across a head's channels: each channel j runs an
/// independent scalar-input scan with the head's common (α_t, b_t, c_t).
///
/// u: (L, hd), alpha: (L), b: (L, N), c: (L, N) -> y: (L, hd).
/// With `want_cache` the (L, N, hd) state history is returned for the VJP.
pub fn ssd_scan<F: Real>(
    u: ArrayView2<F>,
    alpha: ArrayView1<F>,
    b: ArrayView2<F>,
    c: ArrayView2<F>,
    want_cache: bool,
) -> (Array2<F>, Option<Array3<F>>) {
    let (l, hd) = u.dim();
    let n = b.shape()[1];
    assert_eq!(alpha.len(), l);
    assert_eq!(b.shape()[0], l);
    assert_eq!(c.dim(), (l, n));

    let mut h = Array2::<F>::zeros((n, hd));
    let mut hist = want_cache.then(|| Array3::<F>::zeros((l, n, hd)));
    let mut y = Array2::<F>::zeros((l, hd));
    for t in 0..l {
        h *= alpha[t];
        let u_t = u.row(t);
        for s in 0..n {
            let mut row = h.row_mut(s);
            row.scaled_add(b[[t, s]], &u_t);
        }
        {
            let mut y_t = y.row_mut(t);
            for s in 0..n {
                y_t.scaled_add(c[[t, s]], &h.row(s));
            }
        }
        if let Some(hist) = hist.as_mut() {
            hist.index_axis_mut(Axis(0), t).assign(&h);
        }
    }
    (y, hist)
}

/// Gradients for [`ssd_scan`]. Returns (du, dalpha, db, dc).
pub fn ssd_scan_vjp<F: Real>(
    u: ArrayView2<F>,
    alpha: ArrayView1<F>,
    b: ArrayView2<F>,
    c: ArrayView2<F>,
    hist: &Array3<F>,
    dy: &Array2<F>,
) -> (Array2<F>, Array1<F>, Array2<F>, Array2<F>) {
    let (l, hd) = u.dim();
    let n = b.shape()[1];
    let mut du = Array2::<F>::zeros((l, hd));
    let mut d_alpha = Array1::<F>::zeros(l);
    let mut db = Array2::<F>::zeros((l, n));
    let mut dc = Array2::<F>::zeros((l, n));

    let mut carry = Array2::<F>::zeros((n, hd));
    for t in (0..l).rev() {
        let h_t = hist.index_axis(Axis(0), t);
        let dy_t = dy.row(t);

        // λ_t = c_t ⊗ dy_t + carry; dc_t[n] = h_t[n,:]·dy_t
        let mut lam = carry;
        for s in 0..n {
            let mut row = lam.row_mut(s);
            row.scaled_add(c[[t, s]], &dy_t);
            dc[[t, s]] = h_t.row(s).dot(&dy_t);
        }

        if t > 0 {
            let h_prev = hist.index_axis(Axis(0), t - 1);
            let mut acc = F::zero();
            ndarray::Zip::from(&lam).and(&h_prev).for_each(|l, h| {
                acc += *l * *h;
            });
            d_alpha[t] = acc;
        }

        let u_t = u.row(t);
        {
            let mut du_t = du.row_mut(t);
            for s in 0..n {
                db[[t, s]] = lam.row(s).dot(&u_t);
                du_t.scaled_add(b[[t, s]], &lam.row(s));
            }
        }

        lam *= alpha[t];
        carry = lam;
    }
    (du, d_alpha, db, dc)
}

/// Dense (L, L) mixing matrix of one scalar channel:
/// M[t,s] = (Π_{r=s+1..t} α_r) · (c_t · b_s) for t ≥ s, else 0.
pub fn materialize_ssd<F: Real>(
    alpha: ArrayView1<F>,
    b: ArrayView2<F>,
    c: ArrayView2<F>,
) -> Array2<F> {
    let l = alpha.len();
    let n = b.shape()[1];
    assert_eq!(b.shape()[0], l);
    assert_eq!(c.dim(), (l, n));
    let mut m = Array2::<F>::zeros((l, l));
    for t in 0..l {
        let mut decay = F::one();
        for s in (0..=t).rev() {
            m[[t, s]] = decay * c.row(t).dot(&b.row(s));
            if s > 0 {
                decay = decay * alpha[s];
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use nnet::Prng;

    fn random_params(l: usize, n: usize, d_in: usize, d_out: usize, rng: &mut Prng) -> SsdParams<f64> {
        SsdParams {
            alpha: Array1::from_shape_fn(l, |_| 0.2 + 0.8 * rng.uniform::<f64>()),
            b_bar: Array3::from_shape_fn((l, n, d_in), |_| rng.normal::<f64>()),
            c: Array3::from_shape_fn((l, d_out, n), |_| rng.normal::<f64>()),
        }
    }

    #[test]
    fn matches_naive_recurrence() {
        let mut rng = Prng::seed(20);
        for _ in 0..25 {
            let (l, n, di, dout) = (
                1 + rng.below(24),
                1 + rng.below(6),
                1 + rng.below(5),
                1 + rng.below(5),
            );
            let p = random_params(l, n, di, dout, &mut rng);
            let x = rng.normal_array2::<f64>((l, di), 1.0);
            let y = ssd_forward(x.view(), &p);
            let y_ref = oracle::ssd_naive(&x, &p);
            let err = oracle::max_rel_err(&y, &y_ref);
            assert!(err < 1e-12, "err {err}");
        }
    }

    #[test]
    fn alpha_one_reduces_to_cumulative_sum() {
        let mut rng = Prng::seed(21);
        let (l, n, d) = (17, 4, 3);
        let mut p = random_params(l, n, d, d, &mut rng);
        p.alpha.fill(1.0);
        let x = rng.normal_array2::<f64>((l, d), 1.0);
        let y = ssd_forward(x.view(), &p);
        let y_ref = oracle::ssd_cumsum_alpha_one(&x, &p);
        let err = oracle::max_rel_err(&y, &y_ref);
        assert!(err < 1e-13, "err {err}");
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let mut rng = Prng::seed(22);
        let (l, n, di, dout) = (7, 3, 4, 2);
        let p = random_params(l, n, di, dout, &mut rng);
        let x = rng.normal_array2::<f64>((l, di), 1.0);
        let w = rng.normal_array2::<f64>((l, dout), 1.0); // fixed loss weights

        let (y, hist) = ssd_forward_cached(x.view(), &p);
        let _ = y;
        let (dx, dp) = ssd_vjp(x.view(), &p, &hist, &w);

        let loss = |x: &Array2<f64>, p: &SsdParams<f64>| (ssd_forward(x.view(), p) * &w).sum();
        let h = 1e-6;

        // Input gradient.
        let mut xp = x.clone();
        for (r, c) in [(0usize, 0usize), (3, 2), (6, 3)] {
            xp[[r, c]] += h;
            let up = loss(&xp, &p);
            xp[[r, c]] -= 2.0 * h;
            let dn = loss(&xp, &p);
            xp[[r, c]] += h;
            let fd = (up - dn) / (2.0 * h);
            assert!((dx[[r, c]] - fd).abs() < 1e-7, "dx at {r},{c}");
        }

        // Decay gradient.
        let mut pp = p.clone();
        for t in [1usize, 4, 6] {
            pp.alpha[t] += h;
            let up = loss(&x, &pp);
            pp.alpha[t] -= 2.0 * h;
            let dn = loss(&x, &pp);
            pp.alpha[t] += h;
            let fd = (up - dn) / (2.0 * h);
            assert!((dp.alpha[t] - fd).abs() < 1e-7, "dalpha at {t}");
        }

        // Input-map and readout-map gradients.
        let mut pp = p.clone();
        for idx in [[2usize, 1usize, 0usize], [5, 0, 3]] {
            pp.b_bar[idx] += h;
            let up = loss(&x, &pp);
            pp.b_bar[idx] -= 2.0 * h;
            let dn = loss(&x, &pp);
            pp.b_bar[idx] += h;
            assert!((dp.b_bar[idx] - (up - dn) / (2.0 * h)).abs() < 1e-7);
        }
        let mut pp = p.clone();
        for idx in [[0usize, 1usize, 2usize], [6, 0, 0]] {
            pp.c[idx] += h;
            let up = loss(&x, &pp);
            pp.c[idx] -= 2.0 * h;
            let dn = loss(&x, &pp);
            pp.c[idx] += h;
            assert!((dp.c[idx] - (up - dn) / (2.0 * h)).abs() < 1e-7);
        }
    }

    #[test]
    fn scan_agrees_with_per_channel_forward() {
        let mut rng = Prng::seed(23);
        let (l, n, hd) = (9, 3, 4);
        let u = rng.normal_array2::<f64>((l, hd), 1.0);
        let alpha = Array1::from_shape_fn(l, |_| 0.3 + 0.7 * rng.uniform::<f64>());
        let b = rng.normal_array2::<f64>((l, n), 1.0);
        let c = rng.normal_array2::<f64>((l, n), 1.0);

        let (y, _) = ssd_scan(u.view(), alpha.view(), b.view(), c.view(), false);

        // Each channel is an independent 1-in/1-out scan with shared params.
        for j in 0..hd {
            let p = SsdParams {
                alpha: alpha.clone(),
                b_bar: Array3::from_shape_fn((l, n, 1), |(t, s, _)| b[[t, s]]),
                c: Array3::from_shape_fn((l, 1, n), |(t, _, s)| c[[t, s]]),
            };
            let xj = Array2::from_shape_fn((l, 1), |(t, _)| u[[t, j]]);
            let yj = ssd_forward(xj.view(), &p);
            for t in 0..l {
                assert!((y[[t, j]] - yj[[t, 0]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn materialized_matrix_reproduces_channel_output() {
        let mut rng = Prng::seed(24);
        let (l, n) = (12, 3);
        let alpha = Array1::from_shape_fn(l, |_| 0.2 + 0.8 * rng.uniform::<f64>());
        let b = rng.normal_array2::<f64>((l, n), 1.0);
        let c = rng.normal_array2::<f64>((l, n), 1.0);
        let u = rng.normal_array2::<f64>((l, 1), 1.0);

        let m = materialize_ssd(alpha.view(), b.view(), c.view());
        // Lower triangular.
        for t in 0..l {
            for s in t + 1..l {
                assert_eq!(m[[t, s]], 0.0);
            }
        }
        let (y, _) = ssd_scan(u.view(), alpha.view(), b.view(), c.view(), false);
        let my = m.dot(&u);
        let err = oracle::max_rel_err(&my, &y);
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    #[should_panic(expected = "decay must be finite and non-negative")]
    fn rejects_negative_decay() {
        let mut rng = Prng::seed(25);
        let mut p = random_params(4, 2, 2, 2, &mut rng);
        p.alpha[2] = -0.1;
        let x = rng.normal_array2::<f64>((4, 2), 1.0);
        ssd_forward(x.view(), &p);
    }

    #[test]
    fn single_step_passes_input_through() {
        let p = SsdParams {
            alpha: ndarray::arr1(&[1.0]),
            b_bar: Array3::from_elem((1, 1, 1), 1.0),
            c: Array3::from_elem((1, 1, 1), 1.0),
        };
        let x = ndarray::arr2(&[[2.0]]);
        let y = ssd_forward(x.view(), &p);
        assert_eq!(y[[0, 0]], 2.0);
    }

    #[test]
    fn zero_decay_is_memoryless() {
        let mut rng = Prng::seed(26);
        let (l, n, d) = (10, 3, 4);
        let mut p = random_params(l, n, d, d, &mut rng);
        p.alpha.fill(0.0);
        let x = rng.normal_array2::<f64>((l, d), 1.0);
        let y = ssd_forward(x.view(), &p);
        // With no carried state, y_t = C_t (B̄_t x_t) independently per step.
        for t in 0..l {
            let bt = p.b_bar.index_axis(Axis(0), t);
            let ct = p.c.index_axis(Axis(0), t);
            let local = ct.dot(&bt.dot(&x.row(t)));
            for o in 0..d {
                assert!((y[[t, o]] - local[o]).abs() < 1e-13);
            }
        }
    }
}
