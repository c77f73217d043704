//! Seeded randomness. One wrapper type so every draw in the project goes
//! through the same deterministic ChaCha8 stream.
//!
//! All samples are drawn in f64 and converted, so an f32 and an f64 model
//! built from the same seed see the same underlying stream.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::real::Real;

/// Deterministic pseudo-random stream.
pub struct Prng {
    inner: ChaCha8Rng,
}

impl Prng {
    pub fn seed(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derive an independent stream (advances this one by one draw).
    pub fn fork(&mut self) -> Self {
        Self::seed(self.inner.next_u64())
    }

    /// Standard normal draw.
    pub fn normal<F: Real>(&mut self) -> F {
        F::of_f64(self.inner.sample::<f64, _>(StandardNormal))
    }

    /// Uniform draw in [0, 1).
    pub fn uniform<F: Real>(&mut self) -> F {
        F::of_f64(self.inner.gen::<f64>())
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        xs.shuffle(&mut self.inner);
    }

    pub fn normal_array1<F: Real>(&mut self, n: usize, std: f64) -> Array1<F> {
        Array1::from_shape_fn(n, |_| {
            F::of_f64(self.inner.sample::<f64, _>(StandardNormal) * std)
        })
    }

    pub fn normal_array2<F: Real>(&mut self, shape: (usize, usize), std: f64) -> Array2<F> {
        Array2::from_shape_fn(shape, |_| {
            F::of_f64(self.inner.sample::<f64, _>(StandardNormal) * std)
        })
    }
}
