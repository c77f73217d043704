//! Central finite-difference verification of backpropagated gradients.

use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::{nudge_param, Module};

/// Error between an analytic and a finite-difference gradient, relative for
/// large magnitudes and absolute near zero:
/// |a - b| / max(1, |a|, |b|).
pub fn scaled_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs())
}

#[derive(Debug)]
pub struct FdReport {
    pub max_err: f64,
    /// (param name, flat index, analytic, finite difference) of the worst case.
    pub worst: Option<(String, usize, f64, f64)>,
}

/// Choose up to `n` (name, flat index) probe points spread over the
/// parameter index.
pub fn sample_picks(
    index: &[(String, usize)],
    n: usize,
    rng: &mut Prng,
) -> Vec<(String, usize)> {
    let total: usize = index.iter().map(|(_, c)| c).sum();
    let n = n.min(total);
    let mut picks = Vec::with_capacity(n);
    for _ in 0..n {
        let mut flat = rng.below(total);
        for (name, count) in index {
            if flat < *count {
                picks.push((name.clone(), flat));
                break;
            }
            flat -= count;
        }
    }
    picks
}

/// Compare analytic gradients against central differences of `loss`.
///
/// `loss` must be a pure, deterministic function of the parameters (freeze
/// any stochastic draws before calling). Parameters are restored after
/// probing.
pub fn check_params<F: Real, M: Module<F> + ?Sized>(
    m: &mut M,
    mut loss: impl FnMut(&mut M) -> f64,
    analytic: &[(String, usize, f64)],
    h: f64,
) -> FdReport {
    let mut report = FdReport {
        max_err: 0.0,
        worst: None,
    };
    for (name, idx, ga) in analytic {
        nudge_param(m, name, *idx, h);
        let up = loss(m);
        nudge_param(m, name, *idx, -2.0 * h);
        let dn = loss(m);
        nudge_param(m, name, *idx, h);
        let gfd = (up - dn) / (2.0 * h);
        let err = scaled_err(*ga, gfd);
        if err >= report.max_err {
            report.max_err = err;
            report.worst = Some((name.clone(), *idx, *ga, gfd));
        }
    }
    report
}
