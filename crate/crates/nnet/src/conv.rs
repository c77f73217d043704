//! 1-d convolution over the time axis (stride 1, zero-padded "same" output),
//! implemented as patch extraction + matmul.

use ndarray::{Array2, Axis};

use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::{Module, Tensor};

pub struct Conv1d<F> {
    /// (out, in * k) — kernel offsets are the fastest axis.
    pub w: Tensor<F>,
    pub b: Tensor<F>,
    pub k: usize,
}

impl<F: Real> Conv1d<F> {
    pub fn new(in_ch: usize, out_ch: usize, k: usize, rng: &mut Prng) -> Self {
        assert!(k % 2 == 1, "kernel must be odd for same-length output");
        let std = 1.0 / ((in_ch * k) as f64).sqrt();
        Self {
            w: Tensor::randn(&[out_ch, in_ch * k], std, rng),
            b: Tensor::zeros(&[out_ch]),
            k,
        }
    }

    pub fn in_ch(&self) -> usize {
        self.w.v.shape()[1] / self.k
    }

    pub fn out_ch(&self) -> usize {
        self.w.v.shape()[0]
    }

    fn patches(&self, x: &Array2<F>) -> Array2<F> {
        let (l, c) = x.dim();
        let half = self.k / 2;
        let mut p = Array2::zeros((l, c * self.k));
        for t in 0..l {
            for j in 0..self.k {
                let src = t as isize + j as isize - half as isize;
                if src < 0 || src >= l as isize {
                    continue;
                }
                let src = src as usize;
                for ch in 0..c {
                    p[[t, ch * self.k + j]] = x[[src, ch]];
                }
            }
        }
        p
    }

    /// x: (L, in) -> (L, out)
    pub fn forward(&self, x: &Array2<F>) -> Array2<F> {
        let mut y = self.patches(x).dot(&self.w.a2().t());
        y += &self.b.a1();
        y
    }

    pub fn backward(&mut self, x: &Array2<F>, dy: &Array2<F>) -> Array2<F> {
        let (l, c) = x.dim();
        let half = self.k / 2;
        let p = self.patches(x);
        let gw = dy.t().dot(&p);
        self.w.g2_mut().scaled_add(F::one(), &gw);
        let gb = dy.sum_axis(Axis(0));
        self.b.g1_mut().scaled_add(F::one(), &gb);

        let dp = dy.dot(&self.w.a2()); // (L, in*k)
        let mut dx = Array2::zeros((l, c));
        for t in 0..l {
            for j in 0..self.k {
                let src = t as isize + j as isize - half as isize;
                if src < 0 || src >= l as isize {
                    continue;
                }
                let src = src as usize;
                for ch in 0..c {
                    dx[[src, ch]] += dp[[t, ch * self.k + j]];
                }
            }
        }
        dx
    }
}

impl<F: Real> Module<F> for Conv1d<F> {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<F>)) {
        f(&format!("{prefix}.w"), &mut self.w);
        f(&format!("{prefix}.b"), &mut self.b);
    }
}
