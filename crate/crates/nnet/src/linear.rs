//! Dense layer with explicit backward pass.

use ndarray::{Array2, Axis};

use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::{Module, Tensor};

/// y = x Wᵀ + b, rows are positions.
pub struct Linear<F> {
    /// (out, in)
    pub w: Tensor<F>,
    pub b: Option<Tensor<F>>,
}

impl<F: Real> Linear<F> {
    pub fn new(in_dim: usize, out_dim: usize, bias: bool, rng: &mut Prng) -> Self {
        let std = 1.0 / (in_dim as f64).sqrt();
        Self {
            w: Tensor::randn(&[out_dim, in_dim], std, rng),
            b: bias.then(|| Tensor::zeros(&[out_dim])),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.v.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.w.v.shape()[0]
    }

    /// x: (L, in) -> (L, out)
    pub fn forward(&self, x: &Array2<F>) -> Array2<F> {
        let mut y = x.dot(&self.w.a2().t());
        if let Some(b) = &self.b {
            y += &b.a1();
        }
        y
    }

    /// Accumulates parameter gradients, returns dL/dx.
    pub fn backward(&mut self, x: &Array2<F>, dy: &Array2<F>) -> Array2<F> {
        let gw = dy.t().dot(x);
        self.w.g2_mut().scaled_add(F::one(), &gw);
        if let Some(b) = &mut self.b {
            let gb = dy.sum_axis(Axis(0));
            b.g1_mut().scaled_add(F::one(), &gb);
        }
        dy.dot(&self.w.a2())
    }
}

impl<F: Real> Module<F> for Linear<F> {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<F>)) {
        f(&format!("{prefix}.w"), &mut self.w);
        if let Some(b) = &mut self.b {
            f(&format!("{prefix}.b"), b);
        }
    }
}
