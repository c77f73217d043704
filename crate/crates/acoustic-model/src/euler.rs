//! Fixed-grid Euler integration of a velocity field from t = 0 to t = 1.

use ndarray::Array2;

/// Integrates `dx/dt = field(x, t)` with `n_steps` uniform Euler steps.
///
/// Step k evaluates the field at t = k / n_steps and applies
/// `x += dt * v` elementwise.
pub fn euler_integrate<F>(x0: Array2<f64>, n_steps: usize, mut field: F) -> Array2<f64>
where
    F: FnMut(&Array2<f64>, f64) -> Array2<f64>,
{
    assert!(n_steps >= 1, "need at least one step");
    let dt = 1.0 / n_steps as f64;
    let mut x = x0;
    for k in 0..n_steps {
        let t = k as f64 / n_steps as f64;
        let v = field(&x, t);
        assert_eq!(v.dim(), x.dim(), "field changed the state shape");
        x.zip_mut_with(&v, |xi, &vi| *xi += dt * vi);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use nnet::Prng;

    #[test]
    fn zero_field_returns_the_initial_state() {
        let mut rng = Prng::seed(1);
        let x0 = rng.normal_array2::<f64>((4, 5), 1.0);
        let out = euler_integrate(x0.clone(), 10, |x, _| Array2::zeros(x.dim()));
        assert_eq!(out, x0);
    }

    #[test]
    fn linear_decay_matches_the_stepwise_recurrence_bitwise() {
        let mut rng = Prng::seed(2);
        let x0 = rng.normal_array2::<f64>((3, 4), 1.0);
        let out = euler_integrate(x0.clone(), 10, |x, _| x.mapv(|v| -v));

        let dt = 1.0 / 10.0;
        let expected = x0.mapv(|v| {
            let mut y = v;
            for _ in 0..10 {
                y += dt * (-y);
            }
            y
        });
        assert_eq!(out, expected);

        // Ten steps of (1 - 1/10) compound to 0.9^10.
        let closed = x0.mapv(|v| v * 0.9_f64.powi(10));
        for (a, b) in out.iter().zip(closed.iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn field_sees_the_uniform_time_grid() {
        let mut seen = Vec::new();
        let _ = euler_integrate(Array2::zeros((1, 1)), 4, |x, t| {
            seen.push(t);
            Array2::zeros(x.dim())
        });
        assert_eq!(seen, vec![0.0, 0.25, 0.5, 0.75]);
    }
}
