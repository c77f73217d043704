//! Learnable tensors (value + gradient) and a uniform parameter traversal
//! trait used by the optimizer, checkpointing, counting, and gradient checks.

use ndarray::{ArrayD, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, IxDyn};

use crate::real::Real;
use crate::rng::Prng;

/// A parameter tensor and its accumulated gradient.
#[derive(Clone, Debug)]
pub struct Tensor<F> {
    pub v: ArrayD<F>,
    pub g: ArrayD<F>,
}

impl<F: Real> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            v: ArrayD::zeros(IxDyn(shape)),
            g: ArrayD::zeros(IxDyn(shape)),
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        Self {
            v: ArrayD::from_elem(IxDyn(shape), F::of_f64(value)),
            g: ArrayD::zeros(IxDyn(shape)),
        }
    }

    pub fn randn(shape: &[usize], std: f64, rng: &mut Prng) -> Self {
        let v = ArrayD::from_shape_fn(IxDyn(shape), |_| {
            let x: F = rng.normal();
            x * F::of_f64(std)
        });
        let g = ArrayD::zeros(IxDyn(shape));
        Self { v, g }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.g.fill(F::zero());
    }

    pub fn a1(&self) -> ArrayView1<'_, F> {
        self.v.view().into_dimensionality().expect("1-d tensor")
    }

    pub fn a2(&self) -> ArrayView2<'_, F> {
        self.v.view().into_dimensionality().expect("2-d tensor")
    }

    pub fn g1_mut(&mut self) -> ArrayViewMut1<'_, F> {
        self.g.view_mut().into_dimensionality().expect("1-d tensor")
    }

    pub fn g2_mut(&mut self) -> ArrayViewMut2<'_, F> {
        self.g.view_mut().into_dimensionality().expect("2-d tensor")
    }
}

/// Anything owning learnable tensors. Traversal order must be deterministic
/// and stable across calls; names are '.'-joined paths.
pub trait Module<F: Real> {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<F>));
}

/// Total number of learnable scalars.
pub fn param_count<F: Real, M: Module<F> + ?Sized>(m: &mut M) -> usize {
    let mut n = 0;
    m.for_each_param("", &mut |_, t| n += t.len());
    n
}

/// Clear every accumulated gradient.
pub fn zero_grads<F: Real, M: Module<F> + ?Sized>(m: &mut M) {
    m.for_each_param("", &mut |_, t| t.zero_grad());
}

/// (name, element count) for every parameter, in traversal order.
pub fn param_index<F: Real, M: Module<F> + ?Sized>(m: &mut M) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    m.for_each_param("", &mut |name, t| out.push((name.to_string(), t.len())));
    out
}

/// Add `delta` to one scalar of the named parameter.
pub fn nudge_param<F: Real, M: Module<F> + ?Sized>(m: &mut M, name: &str, idx: usize, delta: f64) {
    let mut hit = false;
    m.for_each_param("", &mut |n, t| {
        if n == name {
            let s = t.v.as_slice_mut().expect("contiguous param");
            s[idx] += F::of_f64(delta);
            hit = true;
        }
    });
    assert!(hit, "no parameter named {name}");
}

/// Read one scalar of the named parameter's gradient.
pub fn read_grad<F: Real, M: Module<F> + ?Sized>(m: &mut M, name: &str, idx: usize) -> f64 {
    let mut out = None;
    m.for_each_param("", &mut |n, t| {
        if n == name {
            out = Some(t.g.as_slice().expect("contiguous grad")[idx].as_f64());
        }
    });
    out.unwrap_or_else(|| panic!("no parameter named {name}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Toy {
        w: Tensor<f64>,
        b: Tensor<f64>,
    }

    impl Module<f64> for Toy {
        fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<f64>)) {
            f(&format!("{prefix}.w"), &mut self.w);
            f(&format!("{prefix}.b"), &mut self.b);
        }
    }

    #[test]
    fn count_and_index() {
        let mut m = Toy {
            w: Tensor::zeros(&[3, 4]),
            b: Tensor::zeros(&[4]),
        };
        assert_eq!(param_count(&mut m), 16);
        let idx = param_index(&mut m);
        assert_eq!(idx, vec![(".w".to_string(), 12), (".b".to_string(), 4)]);
    }

    #[test]
    fn nudge_and_grad_access() {
        let mut m = Toy {
            w: Tensor::zeros(&[2, 2]),
            b: Tensor::zeros(&[2]),
        };
        nudge_param(&mut m, ".w", 3, 0.5);
        assert_eq!(m.w.v.as_slice().unwrap()[3], 0.5);
        m.b.g.as_slice_mut().unwrap()[1] = -2.0;
        assert_eq!(read_grad(&mut m, ".b", 1), -2.0);
        zero_grads(&mut m);
        assert_eq!(read_grad(&mut m, ".b", 1), 0.0);
    }
}
