//! Adam with bias correction and a cosine learning-rate schedule.

use ndarray::ArrayD;

use crate::real::Real;
use crate::tensor::Module;

pub struct Adam<F> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Step counter (1-based after the first step).
    pub t: u64,
    m: Vec<ArrayD<F>>,
    v: Vec<ArrayD<F>>,
}

impl<F: Real> Adam<F> {
    pub fn new() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Apply one update from the accumulated gradients. Moments are keyed by
    /// traversal order, which the Module contract fixes.
    pub fn step<M: Module<F> + ?Sized>(&mut self, model: &mut M, lr: f64) {
        self.t += 1;
        let b1 = F::of_f64(self.beta1);
        let b2 = F::of_f64(self.beta2);
        let one = F::one();
        let lr_t = F::of_f64(lr);
        let eps = F::of_f64(self.eps);
        let bc1 = F::of_f64(1.0 - self.beta1.powi(self.t as i32));
        let bc2 = F::of_f64(1.0 - self.beta2.powi(self.t as i32));

        let first = self.m.is_empty();
        let mut i = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        model.for_each_param("", &mut |_, t| {
            if first {
                ms.push(ArrayD::zeros(t.v.raw_dim()));
                vs.push(ArrayD::zeros(t.v.raw_dim()));
            }
            let m = &mut ms[i];
            let v = &mut vs[i];
            ndarray::Zip::from(&mut t.v)
                .and(&t.g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    let mhat = *m / bc1;
                    let vhat = *v / bc2;
                    *p = *p - lr_t * mhat / (vhat.sqrt() + eps);
                });
            i += 1;
        });
    }

    /// First/second moment arrays in traversal order (for checkpointing).
    pub fn moments(&self) -> (&[ArrayD<F>], &[ArrayD<F>]) {
        (&self.m, &self.v)
    }

    pub fn restore(&mut self, t: u64, m: Vec<ArrayD<F>>, v: Vec<ArrayD<F>>) {
        self.t = t;
        self.m = m;
        self.v = v;
    }
}

impl<F: Real> Default for Adam<F> {
    fn default() -> Self {
        Self::new()
    }
}

/// Cosine decay from `base` at epoch 0 towards 0 at `total` epochs.
pub fn cosine_lr(base: f64, epoch: usize, total: usize) -> f64 {
    if total == 0 {
        return base;
    }
    let frac = (epoch as f64 / total as f64).min(1.0);
    base * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos())
}
