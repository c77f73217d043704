//! The text-to-mel model: token encoder, duration predictor, length
//! regulation with speaker/language conditioning, and the flow-matching
//! decoder with its Euler sampler.

use ndarray::{Array1, Array2, Axis};
use nnet::{
    relu, relu_bwd, Conv1d, Dropout, Embedding, LayerNorm, LayerNormCache, Linear, Module, Prng,
    Tensor,
};

use crate::block::{DecBlock, DecBlockCache, MixBlock, MixBlockCache, PrenetCache, PrenetLayer};
use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::euler::euler_integrate;
use crate::train::MelStats;

/// Turns predicted log-durations into whole frame counts, at least one each.
pub fn durations_from_log(log_durations: &Array1<f64>) -> Vec<usize> {
    log_durations
        .iter()
        .map(|&ld| (ld.exp().ceil() as usize).max(1))
        .collect()
}

/// Repeats row `l` of `x` `durations[l]` times, preserving order.
pub fn repeat_rows(x: &Array2<f64>, durations: &[usize]) -> Array2<f64> {
    assert_eq!(x.nrows(), durations.len(), "one duration per row");
    let total: usize = durations.iter().sum();
    let mut out = Array2::zeros((total, x.ncols()));
    let mut row = 0;
    for (l, &n) in durations.iter().enumerate() {
        for _ in 0..n {
            out.row_mut(row).assign(&x.row(l));
            row += 1;
        }
    }
    out
}

/// Adjoint of `repeat_rows`: sums frame rows back onto their source token.
pub(crate) fn scatter_rows(dy: &Array2<f64>, durations: &[usize], n_rows: usize) -> Array2<f64> {
    let mut out = Array2::zeros((n_rows, dy.ncols()));
    let mut row = 0;
    for (l, &n) in durations.iter().enumerate() {
        for _ in 0..n {
            let frame = dy.row(row);
            let mut target = out.row_mut(l);
            target += &frame;
            row += 1;
        }
    }
    out
}

/// Sinusoidal features of the integration time, shape (1, dim).
pub fn time_features(t: f64, dim: usize) -> Array2<f64> {
    assert!(dim % 2 == 0, "time feature width must be even");
    let half = dim / 2;
    let mut out = Array2::zeros((1, dim));
    for i in 0..half {
        let exponent = if half > 1 {
            i as f64 / (half - 1) as f64
        } else {
            0.0
        };
        let freq = 1000.0_f64.powf(exponent);
        out[[0, 2 * i]] = (t * freq).sin();
        out[[0, 2 * i + 1]] = (t * freq).cos();
    }
    out
}

/// Two convolution stages and a linear head predicting one log-duration per
/// token. Trained on the encoder output without feeding gradients back.
pub struct DurationPredictor {
    conv1: Conv1d<f64>,
    ln1: LayerNorm<f64>,
    conv2: Conv1d<f64>,
    ln2: LayerNorm<f64>,
    out: Linear<f64>,
    dropout: Dropout,
}

pub struct DurationCache {
    x: Array2<f64>,
    ln1_cache: LayerNormCache<f64>,
    pre1: Array2<f64>,
    mask1: Option<Array2<f64>>,
    mid: Array2<f64>,
    ln2_cache: LayerNormCache<f64>,
    pre2: Array2<f64>,
    mask2: Option<Array2<f64>>,
    feat: Array2<f64>,
}

impl DurationPredictor {
    fn new(in_dim: usize, filter: usize, dropout: f64, rng: &mut Prng) -> Self {
        Self {
            conv1: Conv1d::new(in_dim, filter, 3, rng),
            ln1: LayerNorm::new(filter),
            conv2: Conv1d::new(filter, filter, 3, rng),
            ln2: LayerNorm::new(filter),
            out: Linear::new(filter, 1, true, rng),
            dropout: Dropout::new(dropout),
        }
    }

    fn forward(
        &self,
        x: &Array2<f64>,
        train: bool,
        rng: &mut Prng,
        want_grad: bool,
    ) -> (Array1<f64>, Option<DurationCache>) {
        let c1 = self.conv1.forward(x);
        let (n1, ln1_cache) = self.ln1.forward(&c1);
        let r1 = relu(&n1);
        let (d1, mask1) = self.dropout.forward(&r1, train, rng);
        let c2 = self.conv2.forward(&d1);
        let (n2, ln2_cache) = self.ln2.forward(&c2);
        let r2 = relu(&n2);
        let (d2, mask2) = self.dropout.forward(&r2, train, rng);
        let y = self.out.forward(&d2);
        let log_durations = y.column(0).to_owned();
        let cache = want_grad.then(|| DurationCache {
            x: x.clone(),
            ln1_cache,
            pre1: n1,
            mask1,
            mid: d1,
            ln2_cache,
            pre2: n2,
            mask2,
            feat: d2,
        });
        (log_durations, cache)
    }

    fn backward(&mut self, cache: &DurationCache, dlog: &Array1<f64>) {
        let dy = dlog.view().insert_axis(Axis(1)).to_owned();
        let dd2 = self.out.backward(&cache.feat, &dy);
        let dr2 = Dropout::backward(&cache.mask2, &dd2);
        let dn2 = relu_bwd(&cache.pre2, &dr2);
        let dc2 = self.ln2.backward(&cache.ln2_cache, &dn2);
        let dd1 = self.conv2.backward(&cache.mid, &dc2);
        let dr1 = Dropout::backward(&cache.mask1, &dd1);
        let dn1 = relu_bwd(&cache.pre1, &dr1);
        let dc1 = self.ln1.backward(&cache.ln1_cache, &dn1);
        // The input is treated as detached: the returned gradient stops here.
        let _ = self.conv1.backward(&cache.x, &dc1);
    }
}

impl Module<f64> for DurationPredictor {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<f64>)) {
        self.conv1.for_each_param(&format!("{prefix}conv1."), f);
        self.ln1.for_each_param(&format!("{prefix}ln1."), f);
        self.conv2.for_each_param(&format!("{prefix}conv2."), f);
        self.ln2.for_each_param(&format!("{prefix}ln2."), f);
        self.out.for_each_param(&format!("{prefix}out."), f);
    }
}

pub struct Model {
    pub cfg: ModelConfig,
    token_emb: Embedding<f64>,
    prenet: Vec<PrenetLayer>,
    enc_blocks: Vec<MixBlock>,
    mu_proj: Linear<f64>,
    pub(crate) duration: DurationPredictor,
    spk_emb: Embedding<f64>,
    lang_emb: Embedding<f64>,
    cond_proj: Linear<f64>,
    dec_in_proj: Linear<f64>,
    dec_blocks: Vec<DecBlock>,
    dec_ln: LayerNorm<f64>,
    dec_out_proj: Linear<f64>,
}

pub struct EncodeCache {
    tokens: Vec<usize>,
    prenet_caches: Vec<PrenetCache>,
    block_caches: Vec<MixBlockCache>,
    pub enc_out: Array2<f64>,
}

pub struct RegulateCache {
    cat: Array2<f64>,
    durations: Vec<usize>,
    speaker: usize,
    language: usize,
}

pub struct DecodeCache {
    cat: Array2<f64>,
    block_caches: Vec<DecBlockCache>,
    ln_cache: LayerNormCache<f64>,
    normed: Array2<f64>,
}

impl Model {
    pub fn new(cfg: ModelConfig, rng: &mut Prng) -> Result<Self, ModelError> {
        cfg.validate()?;
        let h = cfg.enc_hidden;
        let w = cfg.dec_hidden;
        let prenet = (0..3)
            .map(|_| PrenetLayer::new(h, cfg.enc_dropout, rng))
            .collect();
        let enc_blocks = (0..cfg.enc_blocks)
            .map(|_| MixBlock::new(cfg.mixer, h, cfg.enc_filter, cfg.enc_dropout, rng))
            .collect();
        let dec_blocks = (0..cfg.dec_blocks)
            .map(|_| {
                DecBlock::new(
                    cfg.mixer,
                    w,
                    4 * w,
                    cfg.time_emb_dim,
                    cfg.enc_dropout,
                    rng,
                )
            })
            .collect();
        Ok(Self {
            token_emb: Embedding::new(cfg.vocab_size, h, rng),
            prenet,
            enc_blocks,
            mu_proj: Linear::new(h, cfg.dec_out, true, rng),
            duration: DurationPredictor::new(h, cfg.dur_filter, cfg.enc_dropout, rng),
            spk_emb: Embedding::new(cfg.n_speakers, cfg.speaker_emb_dim, rng),
            lang_emb: Embedding::new(cfg.n_languages, cfg.language_emb_dim, rng),
            cond_proj: Linear::new(
                h + cfg.speaker_emb_dim + cfg.language_emb_dim,
                cfg.dec_in,
                true,
                rng,
            ),
            dec_in_proj: Linear::new(cfg.dec_out + cfg.dec_in, w, true, rng),
            dec_blocks,
            dec_ln: LayerNorm::new(w),
            dec_out_proj: Linear::new(w, cfg.dec_out, true, rng),
            cfg,
        })
    }

    /// Token ids → (hidden states (L, enc_hidden), per-token mel means (L, dec_out)).
    pub fn encode(
        &self,
        tokens: &[usize],
        train: bool,
        rng: &mut Prng,
        want_grad: bool,
    ) -> Result<(Array2<f64>, Array2<f64>, Option<EncodeCache>), ModelError> {
        if tokens.is_empty() {
            return Err(ModelError::EmptyTokens);
        }
        let emb_out = self.token_emb.forward(tokens);

        let mut h = emb_out.clone();
        let mut prenet_caches = Vec::new();
        for layer in &self.prenet {
            let (y, cache) = layer.forward(&h, train, rng, want_grad);
            if let Some(c) = cache {
                prenet_caches.push(c);
            }
            h = y;
        }
        let mut x = &emb_out + &h;

        let mut block_caches = Vec::new();
        for block in &self.enc_blocks {
            let (y, cache) = block.forward(&x, train, rng, want_grad);
            if let Some(c) = cache {
                block_caches.push(c);
            }
            x = y;
        }
        let mu = self.mu_proj.forward(&x);
        let cache = want_grad.then(|| EncodeCache {
            tokens: tokens.to_vec(),
            prenet_caches,
            block_caches,
            enc_out: x.clone(),
        });
        Ok((x, mu, cache))
    }

    /// Backpropagates through the encoder given gradients for both heads.
    pub fn encode_backward(
        &mut self,
        cache: &EncodeCache,
        denc_out: &Array2<f64>,
        dmu: &Array2<f64>,
    ) {
        let mut dx = denc_out + &self.mu_proj.backward(&cache.enc_out, dmu);
        for (block, bc) in self
            .enc_blocks
            .iter_mut()
            .zip(&cache.block_caches)
            .rev()
        {
            dx = block.backward(bc, &dx);
        }
        // x = emb + prenet(emb): both paths feed the embedding.
        let mut dh = dx.clone();
        for (layer, pc) in self.prenet.iter_mut().zip(&cache.prenet_caches).rev() {
            dh = layer.backward(pc, &dh);
        }
        let demb = &dx + &dh;
        self.token_emb.backward(&cache.tokens, &demb);
    }

    pub fn predict_log_durations(
        &self,
        enc_out: &Array2<f64>,
        train: bool,
        rng: &mut Prng,
        want_grad: bool,
    ) -> (Array1<f64>, Option<DurationCache>) {
        self.duration.forward(enc_out, train, rng, want_grad)
    }

    pub fn duration_backward(&mut self, cache: &DurationCache, dlog: &Array1<f64>) {
        self.duration.backward(cache, dlog);
    }

    /// Upsamples encoder rows by their durations, appends speaker and
    /// language embeddings, and projects to the decoder conditioning width.
    pub fn regulate(
        &self,
        enc_out: &Array2<f64>,
        durations: &[usize],
        speaker: usize,
        language: usize,
        want_grad: bool,
    ) -> (Array2<f64>, Option<RegulateCache>) {
        let rep = repeat_rows(enc_out, durations);
        let t_frames = rep.nrows();
        let h = enc_out.ncols();
        let s = self.cfg.speaker_emb_dim;
        let spk = self.spk_emb.row(speaker);
        let lang = self.lang_emb.row(language);

        let mut cat = Array2::zeros((t_frames, h + s + self.cfg.language_emb_dim));
        for t in 0..t_frames {
            let mut row = cat.row_mut(t);
            row.slice_mut(ndarray::s![0..h]).assign(&rep.row(t));
            row.slice_mut(ndarray::s![h..h + s]).assign(&spk);
            row.slice_mut(ndarray::s![h + s..]).assign(&lang);
        }
        let cond = self.cond_proj.forward(&cat);
        let cache = want_grad.then(|| RegulateCache {
            cat,
            durations: durations.to_vec(),
            speaker,
            language,
        });
        (cond, cache)
    }

    /// Returns the gradient w.r.t. the encoder output; embedding gradients
    /// accumulate in place.
    pub fn regulate_backward(&mut self, cache: &RegulateCache, dcond: &Array2<f64>) -> Array2<f64> {
        let dcat = self.cond_proj.backward(&cache.cat, dcond);
        let h = self.cfg.enc_hidden;
        let s = self.cfg.speaker_emb_dim;

        let drep = dcat.slice(ndarray::s![.., 0..h]).to_owned();
        let dspk = dcat
            .slice(ndarray::s![.., h..h + s])
            .sum_axis(Axis(0))
            .insert_axis(Axis(0));
        let dlang = dcat
            .slice(ndarray::s![.., h + s..])
            .sum_axis(Axis(0))
            .insert_axis(Axis(0));
        self.spk_emb.backward(&[cache.speaker], &dspk);
        self.lang_emb.backward(&[cache.language], &dlang);
        scatter_rows(&drep, &cache.durations, self.count_tokens(cache))
    }

    fn count_tokens(&self, cache: &RegulateCache) -> usize {
        cache.durations.len()
    }

    /// Velocity field of the decoder at integration time `t`.
    pub fn decode_field(
        &self,
        x: &Array2<f64>,
        t: f64,
        cond: &Array2<f64>,
        train: bool,
        rng: &mut Prng,
        want_grad: bool,
    ) -> (Array2<f64>, Option<DecodeCache>) {
        assert_eq!(x.nrows(), cond.nrows(), "frame counts must match");
        let t_frames = x.nrows();
        let mut cat = Array2::zeros((t_frames, self.cfg.dec_out + self.cfg.dec_in));
        for r in 0..t_frames {
            let mut row = cat.row_mut(r);
            row.slice_mut(ndarray::s![0..self.cfg.dec_out]).assign(&x.row(r));
            row.slice_mut(ndarray::s![self.cfg.dec_out..]).assign(&cond.row(r));
        }

        let mut h = self.dec_in_proj.forward(&cat);
        let tf = time_features(t, self.cfg.time_emb_dim);
        let mut block_caches = Vec::new();
        for block in &self.dec_blocks {
            let (y, cache) = block.forward(&h, &tf, train, rng, want_grad);
            if let Some(c) = cache {
                block_caches.push(c);
            }
            h = y;
        }
        let (normed, ln_cache) = self.dec_ln.forward(&h);
        let v = self.dec_out_proj.forward(&normed);
        let cache = want_grad.then(|| DecodeCache {
            cat,
            block_caches,
            ln_cache,
            normed,
        });
        (v, cache)
    }

    /// Returns the gradient w.r.t. the conditioning sequence. The gradient
    /// toward the noisy input is discarded: it carries no parameters.
    pub fn decode_backward(&mut self, cache: &DecodeCache, dv: &Array2<f64>) -> Array2<f64> {
        let dnormed = self.dec_out_proj.backward(&cache.normed, dv);
        let mut dh = self.dec_ln.backward(&cache.ln_cache, &dnormed);
        for (block, bc) in self.dec_blocks.iter_mut().zip(&cache.block_caches).rev() {
            dh = block.backward(bc, &dh);
        }
        let dcat = self.dec_in_proj.backward(&cache.cat, &dh);
        dcat.slice(ndarray::s![.., self.cfg.dec_out..]).to_owned()
    }

    /// Full synthesis path: durations from the predictor, Euler integration
    /// from seeded noise, then de-normalization to mel units. Deterministic
    /// for a fixed seed.
    pub fn synthesize(
        &self,
        tokens: &[usize],
        speaker: usize,
        language: usize,
        n_steps: usize,
        seed: u64,
        stats: &MelStats,
    ) -> Result<Array2<f64>, ModelError> {
        assert!(n_steps >= 1, "need at least one integration step");
        let mut rng = Prng::seed(seed);
        let (enc_out, _mu, _) = self.encode(tokens, false, &mut rng, false)?;
        let (log_durations, _) = self.predict_log_durations(&enc_out, false, &mut rng, false);
        let durations = durations_from_log(&log_durations);
        let (cond, _) = self.regulate(&enc_out, &durations, speaker, language, false);

        let t_frames: usize = durations.iter().sum();
        let x0 = rng.normal_array2::<f64>((t_frames, self.cfg.dec_out), 1.0);
        let x1 = euler_integrate(x0, n_steps, |x, t| {
            let (v, _) = self.decode_field(x, t, &cond, false, &mut Prng::seed(0), false);
            v
        });

        let mut mel = Array2::zeros((self.cfg.dec_out, t_frames));
        for t in 0..t_frames {
            for c in 0..self.cfg.dec_out {
                mel[[c, t]] = x1[[t, c]] * stats.std[c] + stats.mean[c];
            }
        }
        Ok(mel)
    }
}

impl Module<f64> for Model {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<f64>)) {
        self.token_emb
            .for_each_param(&format!("{prefix}token_emb."), f);
        for (i, layer) in self.prenet.iter_mut().enumerate() {
            layer.for_each_param(&format!("{prefix}prenet.{i}."), f);
        }
        for (i, block) in self.enc_blocks.iter_mut().enumerate() {
            block.for_each_param(&format!("{prefix}enc.{i}."), f);
        }
        self.mu_proj.for_each_param(&format!("{prefix}mu."), f);
        self.duration
            .for_each_param(&format!("{prefix}duration."), f);
        self.spk_emb.for_each_param(&format!("{prefix}spk_emb."), f);
        self.lang_emb
            .for_each_param(&format!("{prefix}lang_emb."), f);
        self.cond_proj.for_each_param(&format!("{prefix}cond."), f);
        self.dec_in_proj
            .for_each_param(&format!("{prefix}dec_in."), f);
        for (i, block) in self.dec_blocks.iter_mut().enumerate() {
            block.for_each_param(&format!("{prefix}dec.{i}."), f);
        }
        self.dec_ln.for_each_param(&format!("{prefix}dec_ln."), f);
        self.dec_out_proj
            .for_each_param(&format!("{prefix}dec_out."), f);
    }
}
