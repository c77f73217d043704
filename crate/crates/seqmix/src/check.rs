//! Gradient verification for whole mixing layers: backpropagated gradients
//! of a fixed random weighted-sum loss against central finite differences,
//! in f64.

use ndarray::Array2;
use nnet::fd::{check_params, sample_picks, scaled_err};
use nnet::{param_index, read_grad, zero_grads, Prng};

use crate::layer::Mixer;

/// Returns the largest relative error over `probes` sampled parameters and a
/// handful of input entries. `h` is the central-difference step.
pub fn backward_check(
    mixer: &mut Mixer<f64>,
    x: &Array2<f64>,
    probes: usize,
    h: f64,
    rng: &mut Prng,
) -> f64 {
    let w = rng.normal_array2::<f64>(x.dim(), 1.0);

    zero_grads(mixer);
    let (_, cache) = mixer.forward(x.view(), true);
    let dx = mixer.backward(&cache.expect("grad cache requested"), &w);

    let mut max_err = 0.0f64;

    // Input gradient at a few spread-out entries.
    let (rows, cols) = x.dim();
    let mut xp = x.clone();
    for i in 0..probes.min(8) {
        let r = (i * 131) % rows;
        let c = (i * 17) % cols;
        xp[[r, c]] += h;
        let up = (mixer.forward(xp.view(), false).0 * &w).sum();
        xp[[r, c]] -= 2.0 * h;
        let dn = (mixer.forward(xp.view(), false).0 * &w).sum();
        xp[[r, c]] += h;
        let fd = (up - dn) / (2.0 * h);
        max_err = max_err.max(scaled_err(dx[[r, c]], fd));
    }

    // Parameter gradients at sampled probes (none for parameter-free mixers).
    let index = param_index(mixer);
    if !index.is_empty() {
        let picks = sample_picks(&index, probes, rng);
        let analytic: Vec<_> = picks
            .iter()
            .map(|(n, i)| (n.clone(), *i, read_grad(mixer, n, *i)))
            .collect();
        let report = check_params(
            mixer,
            |m| (m.forward(x.view(), false).0 * &w).sum(),
            &analytic,
            h,
        );
        max_err = max_err.max(report.max_err);
    }
    max_err
}
