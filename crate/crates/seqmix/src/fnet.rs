//! Parameter-free Fourier mixing.
//!
//! y = Re(DFT_seq(DFT_hidden(x))): an unnormalized DFT along the hidden
//! dimension, then along the sequence dimension, keeping the real part.
//! Expanding the two transforms, y[l,h] = Σ_{l',h'} cos(2π(ll'/L + hh'/H))
//! x[l',h'] — the map is linear with a symmetric matrix, so it is its own
//! adjoint and the backward pass is the forward pass applied to the
//! incoming gradient.
//!
//! Transforms are exact-length (mixed-radix with Bluestein fallback), so no
//! padding artifacts appear for any L or H.

use ndarray::{Array2, ArrayView2};
use nnet::Real;
use rustfft::{num_complex::Complex, FftPlanner};

/// x: (L, H) -> (L, H). Panics on non-finite input.
pub fn fnet_forward<F: Real>(x: ArrayView2<F>) -> Array2<F> {
    assert!(x.iter().all(|v| v.is_finite()), "non-finite input");
    let (l, h) = x.dim();
    let mut planner = FftPlanner::<F>::new();
    let fft_h = planner.plan_fft_forward(h);
    let fft_l = planner.plan_fft_forward(l);
    let mut scratch = vec![
        Complex::new(F::zero(), F::zero());
        fft_h.get_inplace_scratch_len().max(fft_l.get_inplace_scratch_len())
    ];

    let mut buf: Vec<Complex<F>> = x.iter().map(|v| Complex::new(*v, F::zero())).collect();
    for row in buf.chunks_exact_mut(h) {
        fft_h.process_with_scratch(row, &mut scratch);
    }
    let mut col = vec![Complex::new(F::zero(), F::zero()); l];
    for j in 0..h {
        for t in 0..l {
            col[t] = buf[t * h + j];
        }
        fft_l.process_with_scratch(&mut col, &mut scratch);
        for t in 0..l {
            buf[t * h + j] = col[t];
        }
    }
    Array2::from_shape_fn((l, h), |(t, j)| buf[t * h + j].re)
}
