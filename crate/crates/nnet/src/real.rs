//! Scalar abstraction over f32/f64.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar the whole stack is generic over.
///
/// f32 is the product path (training, synthesis, benchmarks); f64 exists so
/// gradients can be verified against central finite differences.
pub trait Real:
    num_traits::Float
    + num_traits::NumAssignOps
    + ndarray::LinalgScalar
    + ndarray::ScalarOperand
    + rustfft::FftNum
    + Display
    + Debug
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Dtype tag used in reports.
    const DTYPE: &'static str;

    fn of_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;

    fn of_usize(n: usize) -> Self {
        Self::of_f64(n as f64)
    }
}

impl Real for f32 {
    const DTYPE: &'static str = "float32";

    fn of_f64(x: f64) -> Self {
        x as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const DTYPE: &'static str = "float64";

    fn of_f64(x: f64) -> Self {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }
}
