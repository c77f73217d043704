//! Layer normalization over the channel axis, per row.

use ndarray::{Array1, Array2, Axis};

use crate::real::Real;
use crate::tensor::{Module, Tensor};

pub struct LayerNorm<F> {
    pub gamma: Tensor<F>,
    pub beta: Tensor<F>,
    pub eps: f64,
}

pub struct LayerNormCache<F> {
    /// Normalized input before the affine map.
    pub xhat: Array2<F>,
    pub inv_std: Array1<F>,
}

impl<F: Real> LayerNorm<F> {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Tensor::filled(&[dim], 1.0),
            beta: Tensor::zeros(&[dim]),
            eps: 1e-5,
        }
    }

    /// x: (L, C) -> (y, cache)
    pub fn forward(&self, x: &Array2<F>) -> (Array2<F>, LayerNormCache<F>) {
        let (l, c) = x.dim();
        let cf = F::of_usize(c);
        let eps = F::of_f64(self.eps);
        let mut xhat = Array2::zeros((l, c));
        let mut inv_std = Array1::zeros(l);
        for (i, row) in x.axis_iter(Axis(0)).enumerate() {
            let mean = row.sum() / cf;
            let var = row.iter().map(|v| (*v - mean) * (*v - mean)).sum::<F>() / cf;
            let istd = F::one() / (var + eps).sqrt();
            inv_std[i] = istd;
            for j in 0..c {
                xhat[[i, j]] = (row[j] - mean) * istd;
            }
        }
        let y = &xhat * &self.gamma.a1() + &self.beta.a1();
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward(&mut self, cache: &LayerNormCache<F>, dy: &Array2<F>) -> Array2<F> {
        let (l, c) = dy.dim();
        let cf = F::of_usize(c);
        let gamma = self.gamma.a1().to_owned();

        // Parameter gradients.
        {
            let gg = (dy * &cache.xhat).sum_axis(Axis(0));
            self.gamma.g1_mut().scaled_add(F::one(), &gg);
            let gb = dy.sum_axis(Axis(0));
            self.beta.g1_mut().scaled_add(F::one(), &gb);
        }

        let mut dx = Array2::zeros((l, c));
        for i in 0..l {
            let istd = cache.inv_std[i];
            let mut sum_dxhat = F::zero();
            let mut sum_dxhat_xhat = F::zero();
            for j in 0..c {
                let dxhat = dy[[i, j]] * gamma[j];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * cache.xhat[[i, j]];
            }
            let m1 = sum_dxhat / cf;
            let m2 = sum_dxhat_xhat / cf;
            for j in 0..c {
                let dxhat = dy[[i, j]] * gamma[j];
                dx[[i, j]] = istd * (dxhat - m1 - cache.xhat[[i, j]] * m2);
            }
        }
        dx
    }
}

impl<F: Real> Module<F> for LayerNorm<F> {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<F>)) {
        f(&format!("{prefix}.gamma"), &mut self.gamma);
        f(&format!("{prefix}.beta"), &mut self.beta);
    }
}
