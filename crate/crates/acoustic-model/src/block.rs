//! Building blocks shared by the encoder and decoder: a convolutional
//! pre-net layer and the pre-norm mixer block with a convolutional
//! feed-forward tail.

use ndarray::{Array2, Axis};
use nnet::{relu, relu_bwd, Conv1d, Dropout, LayerNorm, LayerNormCache, Linear, Module, Prng, Tensor};
use seqmix::{Mixer, MixerCache, MixerKind};

/// Conv(k=5) → LayerNorm → ReLU → Dropout.
pub struct PrenetLayer {
    pub conv: Conv1d<f64>,
    pub ln: LayerNorm<f64>,
    pub dropout: Dropout,
}

pub struct PrenetCache {
    x: Array2<f64>,
    ln_cache: LayerNormCache<f64>,
    pre_act: Array2<f64>,
    mask: Option<Array2<f64>>,
}

impl PrenetLayer {
    pub fn new(dim: usize, dropout: f64, rng: &mut Prng) -> Self {
        Self {
            conv: Conv1d::new(dim, dim, 5, rng),
            ln: LayerNorm::new(dim),
            dropout: Dropout::new(dropout),
        }
    }

    pub fn forward(
        &self,
        x: &Array2<f64>,
        train: bool,
        rng: &mut Prng,
        want_grad: bool,
    ) -> (Array2<f64>, Option<PrenetCache>) {
        let c = self.conv.forward(x);
        let (n, ln_cache) = self.ln.forward(&c);
        let r = relu(&n);
        let (y, mask) = self.dropout.forward(&r, train, rng);
        let cache = want_grad.then(|| PrenetCache {
            x: x.clone(),
            ln_cache,
            pre_act: n,
            mask,
        });
        (y, cache)
    }

    pub fn backward(&mut self, cache: &PrenetCache, dy: &Array2<f64>) -> Array2<f64> {
        let dr = Dropout::backward(&cache.mask, dy);
        let dn = relu_bwd(&cache.pre_act, &dr);
        let dc = self.ln.backward(&cache.ln_cache, &dn);
        self.conv.backward(&cache.x, &dc)
    }
}

impl Module<f64> for PrenetLayer {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<f64>)) {
        self.conv.for_each_param(&format!("{prefix}conv."), f);
        self.ln.for_each_param(&format!("{prefix}ln."), f);
    }
}

/// Pre-norm residual block: x + mixer(LN(x)), then x + FFN(LN(x)) with a
/// kernel-3 convolutional feed-forward.
pub struct MixBlock {
    pub ln1: LayerNorm<f64>,
    pub mixer: Mixer<f64>,
    pub ln2: LayerNorm<f64>,
    pub ff1: Conv1d<f64>,
    pub ff2: Conv1d<f64>,
    pub dropout: Dropout,
}

pub struct MixBlockCache {
    ln1_cache: LayerNormCache<f64>,
    mixer_cache: MixerCache<f64>,
    ln2_cache: LayerNormCache<f64>,
    ff_in: Array2<f64>,
    pre_act: Array2<f64>,
    mask: Option<Array2<f64>>,
    dropped: Array2<f64>,
}

impl MixBlock {
    pub fn new(kind: MixerKind, dim: usize, filter: usize, dropout: f64, rng: &mut Prng) -> Self {
        Self {
            ln1: LayerNorm::new(dim),
            mixer: Mixer::new(kind, dim, rng),
            ln2: LayerNorm::new(dim),
            ff1: Conv1d::new(dim, filter, 3, rng),
            ff2: Conv1d::new(filter, dim, 3, rng),
            dropout: Dropout::new(dropout),
        }
    }

    pub fn forward(
        &self,
        x: &Array2<f64>,
        train: bool,
        rng: &mut Prng,
        want_grad: bool,
    ) -> (Array2<f64>, Option<MixBlockCache>) {
        let (a, ln1_cache) = self.ln1.forward(x);
        let (m, mixer_cache) = self.mixer.forward(a.view(), want_grad);
        let h = x + &m;

        let (b, ln2_cache) = self.ln2.forward(&h);
        let p = self.ff1.forward(&b);
        let r = relu(&p);
        let (d, mask) = self.dropout.forward(&r, train, rng);
        let f = self.ff2.forward(&d);
        let y = &h + &f;

        let cache = want_grad.then(|| MixBlockCache {
            ln1_cache,
            mixer_cache: mixer_cache.expect("mixer cache requested"),
            ln2_cache,
            ff_in: b,
            pre_act: p,
            mask,
            dropped: d,
        });
        (y, cache)
    }

    pub fn backward(&mut self, cache: &MixBlockCache, dy: &Array2<f64>) -> Array2<f64> {
        // y = h + ff2(dropout(relu(ff1(ln2(h)))))
        let dd = self.ff2.backward(&cache.dropped, dy);
        let dr = Dropout::backward(&cache.mask, &dd);
        let dp = relu_bwd(&cache.pre_act, &dr);
        let db = self.ff1.backward(&cache.ff_in, &dp);
        let dh = dy + &self.ln2.backward(&cache.ln2_cache, &db);

        // h = x + mixer(ln1(x))
        let da = self.mixer.backward(&cache.mixer_cache, &dh);
        &dh + &self.ln1.backward(&cache.ln1_cache, &da)
    }
}

impl Module<f64> for MixBlock {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<f64>)) {
        self.ln1.for_each_param(&format!("{prefix}ln1."), f);
        self.mixer.for_each_param(&format!("{prefix}mixer."), f);
        self.ln2.for_each_param(&format!("{prefix}ln2."), f);
        self.ff1.for_each_param(&format!("{prefix}ff1."), f);
        self.ff2.for_each_param(&format!("{prefix}ff2."), f);
    }
}

/// Decoder block: adds a learned projection of the step-time features to
/// every row before the mixer block.
pub struct DecBlock {
    pub time_lin: Linear<f64>,
    pub block: MixBlock,
}

pub struct DecBlockCache {
    time_feat: Array2<f64>,
    block_cache: MixBlockCache,
}

impl DecBlock {
    pub fn new(
        kind: MixerKind,
        dim: usize,
        filter: usize,
        time_dim: usize,
        dropout: f64,
        rng: &mut Prng,
    ) -> Self {
        Self {
            time_lin: Linear::new(time_dim, dim, true, rng),
            block: MixBlock::new(kind, dim, filter, dropout, rng),
        }
    }

    pub fn forward(
        &self,
        x: &Array2<f64>,
        time_feat: &Array2<f64>,
        train: bool,
        rng: &mut Prng,
        want_grad: bool,
    ) -> (Array2<f64>, Option<DecBlockCache>) {
        let tvec = self.time_lin.forward(time_feat);
        let h = x + &tvec.row(0);
        let (y, block_cache) = self.block.forward(&h, train, rng, want_grad);
        let cache = want_grad.then(|| DecBlockCache {
            time_feat: time_feat.clone(),
            block_cache: block_cache.expect("block cache requested"),
        });
        (y, cache)
    }

    pub fn backward(&mut self, cache: &DecBlockCache, dy: &Array2<f64>) -> Array2<f64> {
        let dh = self.block.backward(&cache.block_cache, dy);
        let dtvec = dh.sum_axis(Axis(0)).insert_axis(Axis(0));
        self.time_lin.backward(&cache.time_feat, &dtvec);
        dh
    }
}

impl Module<f64> for DecBlock {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<f64>)) {
        self.time_lin.for_each_param(&format!("{prefix}time."), f);
        self.block.for_each_param(prefix, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nnet::{fd, param_index, read_grad, zero_grads};

    #[test]
    fn mix_block_preserves_shape_for_every_kind() {
        let mut rng = Prng::seed(3);
        for kind in MixerKind::ALL {
            let block = MixBlock::new(kind, 16, 24, 0.0, &mut rng);
            let x = rng.normal_array2::<f64>((7, 16), 1.0);
            let (y, _) = block.forward(&x, false, &mut rng, false);
            assert_eq!(y.dim(), (7, 16));
            assert!(y.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn eval_mode_is_deterministic_despite_dropout() {
        let mut rng = Prng::seed(4);
        let block = MixBlock::new(MixerKind::Mamba2, 16, 24, 0.3, &mut rng);
        let x = rng.normal_array2::<f64>((5, 16), 1.0);
        let (a, _) = block.forward(&x, false, &mut rng, false);
        let (b, _) = block.forward(&x, false, &mut rng, false);
        assert_eq!(a, b);
    }

    #[test]
    fn train_mode_dropout_changes_outputs() {
        let mut rng = Prng::seed(5);
        let block = MixBlock::new(MixerKind::Fnet, 16, 24, 0.5, &mut rng);
        let x = rng.normal_array2::<f64>((5, 16), 1.0);
        let (a, _) = block.forward(&x, true, &mut rng, false);
        let (b, _) = block.forward(&x, true, &mut rng, false);
        assert_ne!(a, b);
    }

    #[test]
    fn block_gradients_match_finite_differences() {
        for kind in [MixerKind::SelfAttention, MixerKind::Mamba2, MixerKind::Fnet] {
            let mut rng = Prng::seed(11);
            let mut block = MixBlock::new(kind, 8, 12, 0.0, &mut rng);
            let x = rng.normal_array2::<f64>((6, 8), 0.7);
            let w = rng.normal_array2::<f64>((6, 8), 1.0);

            zero_grads(&mut block);
            let (y, cache) = block.forward(&x, false, &mut rng, true);
            let dy = 2.0 * (&y - &w);
            block.backward(&cache.unwrap(), &dy);

            let index = param_index(&mut block);
            let picks = fd::sample_picks(&index, 10, &mut rng);
            let analytic: Vec<(String, usize, f64)> = picks
                .iter()
                .map(|(n, i)| (n.clone(), *i, read_grad(&mut block, n, *i)))
                .collect();
            let report = fd::check_params(
                &mut block,
                |b| {
                    let (y, _) = b.forward(&x, false, &mut Prng::seed(0), false);
                    (&y - &w).mapv(|v| v * v).sum()
                },
                &analytic,
                1e-5,
            );
            assert!(
                report.max_err < 1e-5,
                "{}: {:?}",
                kind.name(),
                report.worst
            );
        }
    }

    #[test]
    fn dec_block_time_features_shift_every_row() {
        let mut rng = Prng::seed(6);
        let block = DecBlock::new(MixerKind::Fnet, 12, 16, 8, 0.0, &mut rng);
        let x = rng.normal_array2::<f64>((4, 12), 1.0);
        let t0 = Array2::zeros((1, 8));
        let t1 = Array2::from_elem((1, 8), 0.5);
        let (a, _) = block.forward(&x, &t0, false, &mut rng, false);
        let (b, _) = block.forward(&x, &t1, false, &mut rng, false);
        assert_ne!(a, b);
    }

    #[test]
    fn dec_block_gradients_match_finite_differences() {
        let mut rng = Prng::seed(12);
        let mut block = DecBlock::new(MixerKind::Mamba2, 8, 12, 6, 0.0, &mut rng);
        let x = rng.normal_array2::<f64>((5, 8), 0.7);
        let tf = rng.normal_array2::<f64>((1, 6), 1.0);
        let w = rng.normal_array2::<f64>((5, 8), 1.0);

        zero_grads(&mut block);
        let (y, cache) = block.forward(&x, &tf, false, &mut rng, true);
        let dy = 2.0 * (&y - &w);
        block.backward(&cache.unwrap(), &dy);

        let index = param_index(&mut block);
        let picks = fd::sample_picks(&index, 10, &mut rng);
        let analytic: Vec<(String, usize, f64)> = picks
            .iter()
            .map(|(n, i)| (n.clone(), *i, read_grad(&mut block, n, *i)))
            .collect();
        let report = fd::check_params(
            &mut block,
            |b| {
                let (y, _) = b.forward(&x, &tf, false, &mut Prng::seed(0), false);
                (&y - &w).mapv(|v| v * v).sum()
            },
            &analytic,
            1e-5,
        );
        assert!(report.max_err < 1e-5, "{:?}", report.worst);
    }

    #[test]
    fn prenet_gradients_match_finite_differences() {
        let mut rng = Prng::seed(13);
        let mut layer = PrenetLayer::new(8, 0.0, &mut rng);
        let x = rng.normal_array2::<f64>((6, 8), 0.7);
        let w = rng.normal_array2::<f64>((6, 8), 1.0);

        zero_grads(&mut layer);
        let (y, cache) = layer.forward(&x, false, &mut rng, true);
        let dy = 2.0 * (&y - &w);
        layer.backward(&cache.unwrap(), &dy);

        let index = param_index(&mut layer);
        let picks = fd::sample_picks(&index, 8, &mut rng);
        let analytic: Vec<(String, usize, f64)> = picks
            .iter()
            .map(|(n, i)| (n.clone(), *i, read_grad(&mut layer, n, *i)))
            .collect();
        let report = fd::check_params(
            &mut layer,
            |l| {
                let (y, _) = l.forward(&x, false, &mut Prng::seed(0), false);
                (&y - &w).mapv(|v| v * v).sum()
            },
            &analytic,
            1e-5,
        );
        assert!(report.max_err < 1e-5, "{:?}", report.worst);
    }
}
