//! Wall-clock sampling and the power-law fit shared by the measurements.

use std::time::Instant;

/// Discarded runs before timing starts, so caches and lazy setup are paid
/// for outside the measurement.
pub const WARMUP_RUNS: usize = 2;
/// Timed repetitions; the median damps scheduler noise.
pub const TIMED_RUNS: usize = 5;

/// Median wall-clock seconds of `runs` executions of `f`, after `warmups`
/// discarded executions. Uses the monotonic clock.
pub fn median_seconds(warmups: usize, runs: usize, mut f: impl FnMut()) -> f64 {
    assert!(runs >= 1, "need at least one timed run");
    for _ in 0..warmups {
        f();
    }
    let mut times: Vec<f64> = (0..runs)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[runs / 2]
}

/// Least-squares slope and coefficient of determination of ln(seconds)
/// against ln(size): the exponent of the best-fit power law `t = c * n^slope`
/// and how well it explains the data.
pub fn log_log_fit(sizes: &[usize], seconds: &[f64]) -> (f64, f64) {
    assert_eq!(sizes.len(), seconds.len());
    assert!(sizes.len() >= 2, "need at least two points to fit a line");
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = seconds.iter().map(|&t| t.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    // All-equal timings are a perfect flat line, not an undefined fit.
    let r2 = if syy <= f64::EPSILON {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_timed_runs_is_positive_and_counts_calls() {
        let _g = crate::measurement_lock();
        let mut calls = 0;
        let t = median_seconds(WARMUP_RUNS, TIMED_RUNS, || {
            calls += 1;
            std::hint::black_box((0..2000u64).sum::<u64>());
        });
        assert_eq!(calls, WARMUP_RUNS + TIMED_RUNS);
        assert!(t >= 0.0 && t.is_finite());
    }

    #[test]
    fn exact_power_law_recovers_its_exponent() {
        let sizes = [64usize, 128, 256, 512, 1024];
        let seconds: Vec<f64> = sizes.iter().map(|&n| 3e-9 * (n as f64).powi(2)).collect();
        let (slope, r2) = log_log_fit(&sizes, &seconds);
        assert!((slope - 2.0).abs() < 1e-9, "slope={slope}");
        assert!((r2 - 1.0).abs() < 1e-9, "r2={r2}");
    }

    #[test]
    fn constant_times_fit_a_flat_line_perfectly() {
        let sizes = [32usize, 64, 128, 256];
        let seconds = [1e-3; 4];
        let (slope, r2) = log_log_fit(&sizes, &seconds);
        assert_eq!(slope, 0.0);
        assert_eq!(r2, 1.0);
    }

    #[test]
    fn noisy_data_lowers_r2_below_one() {
        let sizes = [64usize, 128, 256, 512];
        let seconds = [1e-3, 9e-3, 2e-3, 8e-3];
        let (_, r2) = log_log_fit(&sizes, &seconds);
        assert!(r2 < 0.95, "r2={r2}");
    }
}
