//! Property tests over randomized mixing-layer instances: causality of the
//! scan, non-causality of the bidirectional and Fourier mixers, equivalence
//! with brute-force oracles up to L = 64, and the bounded-rank structure of
//! the bidirectional mixing matrix.

use ndarray::{Array1, Array2, Array3};
use proptest::prelude::*;
use seqmix::oracle;
use seqmix::{
    fnet_forward, hydra_forward, materialize_hydra, ssd_forward, HydraParams, SsdParams,
};

use nnet::Prng;

fn random_ssd(l: usize, n: usize, d_in: usize, d_out: usize, rng: &mut Prng) -> SsdParams<f64> {
    SsdParams {
        alpha: Array1::from_shape_fn(l, |_| 0.05 + 0.95 * rng.uniform::<f64>()),
        b_bar: Array3::from_shape_fn((l, n, d_in), |_| rng.normal::<f64>()),
        c: Array3::from_shape_fn((l, d_out, n), |_| rng.normal::<f64>()),
    }
}

fn random_hydra(l: usize, n: usize, dim: usize, rng: &mut Prng) -> HydraParams<f64> {
    HydraParams {
        fwd: random_ssd(l, n, dim, dim, rng),
        bwd: random_ssd(l, n, dim, dim, rng),
        d: Array1::from_shape_fn(dim, |_| rng.normal::<f64>()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Perturbing x_t leaves every earlier output row bit-identical.
    #[test]
    fn scan_output_ignores_later_inputs(seed in 0u64..1 << 48, l in 2usize..40, t_raw in 1usize..40) {
        let mut rng = Prng::seed(seed);
        let t = 1 + t_raw % (l.max(2) - 1);
        let (n, d) = (1 + rng.below(4), 1 + rng.below(4));
        let p = random_ssd(l, n, d, d, &mut rng);
        let mut x = rng.normal_array2::<f64>((l, d), 1.0);
        let y0 = ssd_forward(x.view(), &p);
        x[[t, rng.below(d)]] += 1.0 + rng.uniform::<f64>();
        let y1 = ssd_forward(x.view(), &p);
        for s in 0..t {
            for j in 0..d {
                prop_assert_eq!(y0[[s, j]], y1[[s, j]], "row {} changed by row {}", s, t);
            }
        }
    }

    /// Every mixer matches its independent oracle on random instances.
    #[test]
    fn randomized_oracle_equivalence(seed in 0u64..1 << 48, l in 1usize..=64) {
        let mut rng = Prng::seed(seed);
        let n = 1 + rng.below(4);

        let d = 1 + rng.below(3);
        let p = random_ssd(l, n, d, d, &mut rng);
        let x = rng.normal_array2::<f64>((l, d), 1.0);
        let err = oracle::max_rel_err(&ssd_forward(x.view(), &p), &oracle::ssd_naive(&x, &p));
        prop_assert!(err < 1e-5, "scan err {}", err);

        let hp = random_hydra(l, n, 1, &mut rng);
        let x1 = rng.normal_array2::<f64>((l, 1), 1.0);
        let m = materialize_hydra(&hp);
        let err = oracle::max_rel_err(&hydra_forward(x1.view(), &hp), &m.dot(&x1));
        prop_assert!(err < 1e-5, "bidirectional err {}", err);

        let h = 1 + rng.below(6);
        let xf = rng.normal_array2::<f64>((l, h), 1.0);
        let err = oracle::max_rel_err(&fnet_forward(xf.view()), &oracle::fnet_naive(&xf));
        prop_assert!(err < 1e-5, "fourier err {}", err);
    }

    /// With unit decay the scan equals the running-sum (linear-attention) form.
    #[test]
    fn unit_decay_equals_running_sum(seed in 0u64..1 << 48, l in 1usize..48) {
        let mut rng = Prng::seed(seed);
        let (n, d) = (1 + rng.below(4), 1 + rng.below(4));
        let mut p = random_ssd(l, n, d, d, &mut rng);
        p.alpha.fill(1.0);
        let x = rng.normal_array2::<f64>((l, d), 1.0);
        let err = oracle::max_rel_err(
            &ssd_forward(x.view(), &p),
            &oracle::ssd_cumsum_alpha_one(&x, &p),
        );
        prop_assert!(err < 1e-6, "err {}", err);
    }

    /// Both non-causal mixers let the last input reach the first output.
    #[test]
    fn noncausal_mixers_have_global_receptive_field(seed in 0u64..1 << 48, l in 2usize..32) {
        let mut rng = Prng::seed(seed);
        let hp = random_hydra(l, 2, 2, &mut rng);
        let mut x = rng.normal_array2::<f64>((l, 2), 1.0);
        let y0 = hydra_forward(x.view(), &hp);
        x[[l - 1, 0]] += 2.0;
        let y1 = hydra_forward(x.view(), &hp);
        prop_assert_ne!(y0[[0, 0]], y1[[0, 0]]);

        let mut xf = rng.normal_array2::<f64>((l, 3), 1.0);
        let f0 = fnet_forward(xf.view());
        xf[[l - 1, 1]] += 2.0;
        let f1 = fnet_forward(xf.view());
        prop_assert!((f0[[0, 0]] - f1[[0, 0]]).abs() > 1e-12);
    }
}

/// Numerical rank of a dense block via singular values: count σ_i ≥ tol·σ_1.
fn numerical_rank(block: &Array2<f64>, tol: f64) -> usize {
    let (r, c) = block.dim();
    let m = nalgebra::DMatrix::from_fn(r, c, |i, j| block[[i, j]]);
    let sv = m.svd(false, false).singular_values;
    let s1 = sv[0];
    if s1 == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s >= tol * s1).count()
}

#[test]
fn strictly_triangular_blocks_have_bounded_rank() {
    let mut rng = Prng::seed(80);
    let l = 16;
    for &n in &[1usize, 2, 4] {
        for _ in 0..4 {
            let p = random_hydra(l, n, 1, &mut rng);
            let m = materialize_hydra(&p);
            // Maximal strictly-triangular blocks dominate every submatrix,
            // so bounding their rank bounds all of them.
            for k in 1..l {
                let lower = m.slice(ndarray::s![k.., ..k]).to_owned();
                let upper = m.slice(ndarray::s![..k, k..]).to_owned();
                assert!(
                    numerical_rank(&lower, 1e-8) <= n,
                    "lower block at split {k}, state {n}"
                );
                assert!(
                    numerical_rank(&upper, 1e-8) <= n,
                    "upper block at split {k}, state {n}"
                );
            }
            // A handful of scattered row/column subsets as well.
            for _ in 0..6 {
                let k = 1 + rng.below(l - 1);
                let rows: Vec<usize> = (k..l).filter(|_| rng.uniform::<f64>() < 0.6).collect();
                let cols: Vec<usize> = (0..k).filter(|_| rng.uniform::<f64>() < 0.6).collect();
                if rows.is_empty() || cols.is_empty() {
                    continue;
                }
                let sub = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| {
                    m[[rows[i], cols[j]]]
                });
                assert!(numerical_rank(&sub, 1e-8) <= n, "sampled block, state {n}");
            }
        }
    }
}

/// The diagonal never leaks into the shifted scan branches.
#[test]
fn materialized_diagonal_is_the_diagonal_parameter() {
    let mut rng = Prng::seed(81);
    for _ in 0..8 {
        let l = 2 + rng.below(20);
        let p = random_hydra(l, 1 + rng.below(4), 1, &mut rng);
        let m = materialize_hydra(&p);
        for i in 0..l {
            assert_eq!(m[[i, i]], p.d[0]);
        }
    }
}
