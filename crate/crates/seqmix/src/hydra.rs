//! Bidirectional quasiseparable mixing.
//!
//! Two causal scans — one over the sequence as-is, one over its reversal —
//! are each shifted down by one row so neither contributes to the diagonal,
//! and a per-channel diagonal term is added on top:
//!
//!   y = shift(scan_fwd(x)) + flip(shift(scan_bwd(flip(x)))) + x·diag(d)
//!
//! The resulting (per-channel) mixing matrix is quasiseparable: its diagonal
//! is exactly `d`, and every strictly-triangular submatrix has rank at most
//! the state dimension.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use nnet::Real;

use crate::ssd::{materialize_ssd, ssd_forward_cached, ssd_vjp, SsdParams};

/// Parameters of one bidirectional mix. `bwd` is index-aligned with the
/// reversed input: its step `t` consumes `x[L-1-t]`.
#[derive(Clone, Debug)]
pub struct HydraParams<F> {
    pub fwd: SsdParams<F>,
    pub bwd: SsdParams<F>,
    /// (dim) per-channel diagonal.
    pub d: Array1<F>,
}

impl<F: Real> HydraParams<F> {
    fn check(&self, x: ArrayView2<F>) {
        let (l, dim) = x.dim();
        assert_eq!(self.fwd.seq_len(), l, "forward branch length");
        assert_eq!(self.bwd.seq_len(), l, "backward branch length");
        assert_eq!(self.fwd.in_dim(), dim, "forward input width");
        assert_eq!(self.fwd.out_dim(), dim, "forward output width");
        assert_eq!(self.bwd.in_dim(), dim, "backward input width");
        assert_eq!(self.bwd.out_dim(), dim, "backward output width");
        assert_eq!(self.d.len(), dim, "diagonal width");
        assert!(self.d.iter().all(|v| v.is_finite()), "diagonal must be finite");
    }
}

/// Pad one zero row at the front and drop the last row.
pub fn shift_down<F: Real>(x: ArrayView2<F>) -> Array2<F> {
    let (l, d) = x.dim();
    let mut y = Array2::zeros((l, d));
    if l > 1 {
        y.slice_mut(ndarray::s![1.., ..])
            .assign(&x.slice(ndarray::s![..l - 1, ..]));
    }
    y
}

/// Adjoint of [`shift_down`]: drop the first row and pad a zero row at the end.
pub fn shift_up<F: Real>(x: ArrayView2<F>) -> Array2<F> {
    let (l, d) = x.dim();
    let mut y = Array2::zeros((l, d));
    if l > 1 {
        y.slice_mut(ndarray::s![..l - 1, ..])
            .assign(&x.slice(ndarray::s![1.., ..]));
    }
    y
}

/// Reverse the row order. Self-adjoint.
pub fn flip_rows<F: Real>(x: ArrayView2<F>) -> Array2<F> {
    let mut y = x.to_owned();
    y.invert_axis(Axis(0));
    y
}

/// x: (L, dim) -> (L, dim).
pub fn hydra_forward<F: Real>(x: ArrayView2<F>, p: &HydraParams<F>) -> Array2<F> {
    hydra_forward_cached(x, p).0
}

/// State histories of both branches, for [`hydra_vjp`].
pub struct HydraCache<F> {
    pub h_fwd: Array2<F>,
    pub h_bwd: Array2<F>,
}

pub fn hydra_forward_cached<F: Real>(
    x: ArrayView2<F>,
    p: &HydraParams<F>,
) -> (Array2<F>, HydraCache<F>) {
    p.check(x);
    let x_rev = flip_rows(x);
    let (fwd, h_fwd) = ssd_forward_cached(x, &p.fwd);
    let (bwd, h_bwd) = ssd_forward_cached(x_rev.view(), &p.bwd);

    let mut y = shift_down(fwd.view());
    y += &flip_rows(shift_down(bwd.view()).view());
    for (mut row, x_row) in y.outer_iter_mut().zip(x.outer_iter()) {
        ndarray::Zip::from(&mut row).and(&x_row).and(&p.d).for_each(|y, x, d| {
            *y += *x * *d;
        });
    }
    (y, HydraCache { h_fwd, h_bwd })
}

/// Reverse-mode gradients. Returns (dx, parameter gradients).
pub fn hydra_vjp<F: Real>(
    x: ArrayView2<F>,
    p: &HydraParams<F>,
    cache: &HydraCache<F>,
    dy: &Array2<F>,
) -> (Array2<F>, HydraParams<F>) {
    p.check(x);
    let x_rev = flip_rows(x);

    // Forward branch: y += shift_down(scan), so the scan sees shift_up(dy).
    let d_fwd_out = shift_up(dy.view());
    let (dx_fwd, dp_fwd) = ssd_vjp(x, &p.fwd, &cache.h_fwd, &d_fwd_out);

    // Backward branch: y += flip(shift_down(scan(flip x))).
    let d_bwd_out = shift_up(flip_rows(dy.view()).view());
    let (dx_bwd_rev, dp_bwd) = ssd_vjp(x_rev.view(), &p.bwd, &cache.h_bwd, &d_bwd_out);

    let mut dx = dx_fwd;
    dx += &flip_rows(dx_bwd_rev.view());

    // Diagonal term: y += x·diag(d).
    let mut dd = Array1::<F>::zeros(p.d.len());
    for (dy_row, x_row) in dy.outer_iter().zip(x.outer_iter()) {
        ndarray::Zip::from(&mut dd).and(&dy_row).and(&x_row).for_each(|dd, g, x| {
            *dd += *g * *x;
        });
        // dx gets d ⊙ dy, folded in below.
    }
    for (mut dx_row, dy_row) in dx.outer_iter_mut().zip(dy.outer_iter()) {
        ndarray::Zip::from(&mut dx_row).and(&dy_row).and(&p.d).for_each(|dx, g, d| {
            *dx += *g * *d;
        });
    }

    (
        dx,
        HydraParams {
            fwd: dp_fwd,
            bwd: dp_bwd,
            d: dd,
        },
    )
}

/// Dense (L, L) mixing matrix of a single-channel instance
/// (in_dim = out_dim = 1): shift the forward branch's lower-triangular
/// matrix down, mirror the backward branch's into the upper triangle, and
/// put `d` on the diagonal.
pub fn materialize_hydra<F: Real>(p: &HydraParams<F>) -> Array2<F> {
    assert_eq!(p.fwd.in_dim(), 1, "single-channel oracle only");
    assert_eq!(p.fwd.out_dim(), 1);
    assert_eq!(p.bwd.in_dim(), 1);
    assert_eq!(p.bwd.out_dim(), 1);
    let l = p.fwd.seq_len();
    let n_f = p.fwd.state_dim();
    let n_b = p.bwd.state_dim();

    let bf = Array2::from_shape_fn((l, n_f), |(t, s)| p.fwd.b_bar[[t, s, 0]]);
    let cf = Array2::from_shape_fn((l, n_f), |(t, s)| p.fwd.c[[t, 0, s]]);
    let m_f = materialize_ssd(p.fwd.alpha.view(), bf.view(), cf.view());

    let bb = Array2::from_shape_fn((l, n_b), |(t, s)| p.bwd.b_bar[[t, s, 0]]);
    let cb = Array2::from_shape_fn((l, n_b), |(t, s)| p.bwd.c[[t, 0, s]]);
    let m_b = materialize_ssd(p.bwd.alpha.view(), bb.view(), cb.view());

    let mut m = Array2::<F>::zeros((l, l));
    for t in 0..l {
        for s in 0..l {
            // shift(M_f): row t reads the scan's row t-1.
            let f = if t > 0 { m_f[[t - 1, s]] } else { F::zero() };
            // flip ∘ shift ∘ (M_b on flipped axes): indices reverse twice.
            let ti = l as isize - 2 - t as isize;
            let b = if ti >= 0 {
                m_b[[ti as usize, l - 1 - s]]
            } else {
                F::zero()
            };
            m[[t, s]] = f + b;
        }
        m[[t, t]] += p.d[0];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use ndarray::Array3;
    use nnet::Prng;

    fn random_hydra(l: usize, n: usize, dim: usize, rng: &mut Prng) -> HydraParams<f64> {
        let branch = |rng: &mut Prng| SsdParams {
            alpha: Array1::from_shape_fn(l, |_| 0.2 + 0.8 * rng.uniform::<f64>()),
            b_bar: Array3::from_shape_fn((l, n, dim), |_| rng.normal::<f64>()),
            c: Array3::from_shape_fn((l, dim, n), |_| rng.normal::<f64>()),
        };
        HydraParams {
            fwd: branch(rng),
            bwd: branch(rng),
            d: Array1::from_shape_fn(dim, |_| rng.normal::<f64>()),
        }
    }

    #[test]
    fn zero_branches_reduce_to_diagonal_scaling() {
        let mut rng = Prng::seed(30);
        let (l, n, dim) = (6, 2, 3);
        let mut p = random_hydra(l, n, dim, &mut rng);
        p.fwd.b_bar.fill(0.0);
        p.bwd.b_bar.fill(0.0);
        let x = rng.normal_array2::<f64>((l, dim), 1.0);
        let y = hydra_forward(x.view(), &p);
        for t in 0..l {
            for j in 0..dim {
                assert_eq!(y[[t, j]], p.d[j] * x[[t, j]]);
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let mut rng = Prng::seed(31);
        let p = random_hydra(5, 2, 2, &mut rng);
        let x = Array2::zeros((5, 2));
        let y = hydra_forward(x.view(), &p);
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn matches_composition_oracle() {
        let mut rng = Prng::seed(32);
        for _ in 0..20 {
            let (l, n, dim) = (1 + rng.below(12), 1 + rng.below(4), 1 + rng.below(4));
            let p = random_hydra(l, n, dim, &mut rng);
            let x = rng.normal_array2::<f64>((l, dim), 1.0);
            let y = hydra_forward(x.view(), &p);
            let y_ref = oracle::hydra_naive(&x, &p);
            let err = oracle::max_rel_err(&y, &y_ref);
            assert!(err < 1e-12, "err {err}");
        }
    }

    #[test]
    fn matches_materialized_matrix() {
        let mut rng = Prng::seed(33);
        for _ in 0..20 {
            let (l, n) = (1 + rng.below(10), 1 + rng.below(3));
            let p = random_hydra(l, n, 1, &mut rng);
            let x = rng.normal_array2::<f64>((l, 1), 1.0);
            let y = hydra_forward(x.view(), &p);
            let m = materialize_hydra(&p);
            let my = m.dot(&x);
            let err = oracle::max_rel_err(&my, &y);
            assert!(err < 1e-12, "err {err}");
        }
    }

    #[test]
    fn materialized_diagonal_is_exactly_d() {
        let mut rng = Prng::seed(34);
        let p = random_hydra(9, 3, 1, &mut rng);
        let m = materialize_hydra(&p);
        for i in 0..9 {
            assert_eq!(m[[i, i]], p.d[0]);
        }
    }

    #[test]
    fn last_input_reaches_first_output() {
        let mut rng = Prng::seed(35);
        let p = random_hydra(8, 2, 2, &mut rng);
        let mut x = rng.normal_array2::<f64>((8, 2), 1.0);
        let y0 = hydra_forward(x.view(), &p);
        x[[7, 0]] += 1.0;
        let y1 = hydra_forward(x.view(), &p);
        assert_ne!(y0[[0, 0]], y1[[0, 0]], "mixing must be non-causal");
    }

    #[test]
    fn shift_pair_is_adjoint() {
        let mut rng = Prng::seed(36);
        let a = rng.normal_array2::<f64>((7, 3), 1.0);
        let b = rng.normal_array2::<f64>((7, 3), 1.0);
        let lhs = (&shift_down(a.view()) * &b).sum();
        let rhs = (&a * &shift_up(b.view())).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn single_row_shift_is_zero() {
        let x = ndarray::arr2(&[[3.0, -1.0]]);
        assert!(shift_down(x.view()).iter().all(|v| *v == 0.0));
        assert!(shift_up(x.view()).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let mut rng = Prng::seed(37);
        let (l, n, dim) = (6, 2, 3);
        let p = random_hydra(l, n, dim, &mut rng);
        let x = rng.normal_array2::<f64>((l, dim), 1.0);
        let w = rng.normal_array2::<f64>((l, dim), 1.0);

        let (_, cache) = hydra_forward_cached(x.view(), &p);
        let (dx, dp) = hydra_vjp(x.view(), &p, &cache, &w);

        let loss = |x: &Array2<f64>, p: &HydraParams<f64>| (hydra_forward(x.view(), p) * &w).sum();
        let h = 1e-6;
        let tol = 1e-7;

        let mut xp = x.clone();
        for (r, c) in [(0usize, 0usize), (2, 1), (5, 2)] {
            xp[[r, c]] += h;
            let up = loss(&xp, &p);
            xp[[r, c]] -= 2.0 * h;
            let dn = loss(&xp, &p);
            xp[[r, c]] += h;
            assert!((dx[[r, c]] - (up - dn) / (2.0 * h)).abs() < tol, "dx {r},{c}");
        }

        let mut pp = p.clone();
        for j in 0..dim {
            pp.d[j] += h;
            let up = loss(&x, &pp);
            pp.d[j] -= 2.0 * h;
            let dn = loss(&x, &pp);
            pp.d[j] += h;
            assert!((dp.d[j] - (up - dn) / (2.0 * h)).abs() < tol, "dd {j}");
        }

        let mut pp = p.clone();
        for t in [1usize, 4] {
            pp.fwd.alpha[t] += h;
            let up = loss(&x, &pp);
            pp.fwd.alpha[t] -= 2.0 * h;
            let dn = loss(&x, &pp);
            pp.fwd.alpha[t] += h;
            assert!((dp.fwd.alpha[t] - (up - dn) / (2.0 * h)).abs() < tol, "dalpha fwd {t}");

            pp.bwd.alpha[t] += h;
            let up = loss(&x, &pp);
            pp.bwd.alpha[t] -= 2.0 * h;
            let dn = loss(&x, &pp);
            pp.bwd.alpha[t] += h;
            assert!((dp.bwd.alpha[t] - (up - dn) / (2.0 * h)).abs() < tol, "dalpha bwd {t}");
        }

        let mut pp = p.clone();
        for idx in [[1usize, 0usize, 2usize], [4, 1, 0]] {
            pp.fwd.b_bar[idx] += h;
            let up = loss(&x, &pp);
            pp.fwd.b_bar[idx] -= 2.0 * h;
            let dn = loss(&x, &pp);
            pp.fwd.b_bar[idx] += h;
            assert!((dp.fwd.b_bar[idx] - (up - dn) / (2.0 * h)).abs() < tol);

            pp.bwd.c[[idx[0], idx[2], idx[1]]] += h;
            let up = loss(&x, &pp);
            pp.bwd.c[[idx[0], idx[2], idx[1]]] -= 2.0 * h;
            let dn = loss(&x, &pp);
            pp.bwd.c[[idx[0], idx[2], idx[1]]] += h;
            assert!((dp.bwd.c[[idx[0], idx[2], idx[1]]] - (up - dn) / (2.0 * h)).abs() < tol);
        }
    }
}
