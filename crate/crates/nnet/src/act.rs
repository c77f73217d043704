//! Elementwise activations (with their backward rules) and dropout.

use ndarray::Array2;

use crate::real::Real;
use crate::rng::Prng;

pub fn relu<F: Real>(x: &Array2<F>) -> Array2<F> {
    x.mapv(|v| if v > F::zero() { v } else { F::zero() })
}

pub fn relu_bwd<F: Real>(x: &Array2<F>, dy: &Array2<F>) -> Array2<F> {
    let mut dx = dy.clone();
    dx.zip_mut_with(x, |d, &v| {
        if v <= F::zero() {
            *d = F::zero();
        }
    });
    dx
}

pub fn sigmoid<F: Real>(x: &Array2<F>) -> Array2<F> {
    x.mapv(sigmoid_scalar)
}

pub fn sigmoid_scalar<F: Real>(v: F) -> F {
    F::one() / (F::one() + (-v).exp())
}

/// Backward given the forward *output* y.
pub fn sigmoid_bwd<F: Real>(y: &Array2<F>, dy: &Array2<F>) -> Array2<F> {
    let mut dx = dy.clone();
    dx.zip_mut_with(y, |d, &s| *d = *d * s * (F::one() - s));
    dx
}

pub fn silu<F: Real>(x: &Array2<F>) -> Array2<F> {
    x.mapv(|v| v * sigmoid_scalar(v))
}

/// Backward given the forward *input* x.
pub fn silu_bwd<F: Real>(x: &Array2<F>, dy: &Array2<F>) -> Array2<F> {
    let mut dx = dy.clone();
    dx.zip_mut_with(x, |d, &v| {
        let s = sigmoid_scalar(v);
        *d = *d * (s + v * s * (F::one() - s));
    });
    dx
}

/// Inverted dropout: scales survivors by 1/(1-p) so eval needs no rescale.
pub struct Dropout {
    pub p: f64,
}

impl Dropout {
    pub fn new(p: f64) -> Self {
        assert!((0.0..1.0).contains(&p));
        Self { p }
    }

    /// Returns (y, mask). Mask is None in eval mode or when p == 0.
    pub fn forward<F: Real>(
        &self,
        x: &Array2<F>,
        train: bool,
        rng: &mut Prng,
    ) -> (Array2<F>, Option<Array2<F>>) {
        if !train || self.p == 0.0 {
            return (x.clone(), None);
        }
        let keep = 1.0 - self.p;
        let scale = F::of_f64(1.0 / keep);
        let mask = Array2::from_shape_fn(x.dim(), |_| {
            if rng.uniform::<f64>() < keep {
                scale
            } else {
                F::zero()
            }
        });
        (x * &mask, Some(mask))
    }

    pub fn backward<F: Real>(mask: &Option<Array2<F>>, dy: &Array2<F>) -> Array2<F> {
        match mask {
            Some(m) => dy * m,
            None => dy.clone(),
        }
    }
}
