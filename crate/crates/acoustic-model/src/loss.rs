//! The training objective: flow-matching regression on the decoder field,
//! log-duration regression, and a Gaussian prior tying encoder means to the
//! target mel. All three terms are equally weighted.

use ndarray::{Array1, Array2};
use nnet::Prng;

use crate::align::monotonic_align;
use crate::error::ModelError;
use crate::model::{repeat_rows, scatter_rows, Model};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub cfm: f64,
    pub duration: f64,
    pub prior: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.cfm + self.duration + self.prior
    }
}

/// Stochastic and stop-gradient inputs pinned down for reproducible loss
/// evaluation (used by gradient checks, which must re-evaluate the identical
/// function the backward pass differentiates).
#[derive(Debug, Clone)]
pub struct FrozenDraws {
    pub t: f64,
    pub x0: Array2<f64>,
    pub durations: Vec<usize>,
    /// Encoder output fed to the duration predictor. Training detaches that
    /// branch, so a finite-difference probe must hold its input fixed too.
    pub duration_input: Array2<f64>,
}

pub enum DrawMode<'a> {
    /// Draw t and x0 from the RNG and align durations on the fly.
    Sample,
    Frozen(&'a FrozenDraws),
}

/// Probe point and regression target of the flow between noise `x0` and
/// data `x1` at time `t`.
pub fn flow_pair(
    x0: &Array2<f64>,
    x1: &Array2<f64>,
    t: f64,
    sigma_min: f64,
) -> (Array2<f64>, Array2<f64>) {
    let keep = 1.0 - (1.0 - sigma_min) * t;
    let xt = x0 * keep + &(x1 * t);
    let u = x1 - &(x0 * (1.0 - sigma_min));
    (xt, u)
}

/// Loss of one utterance; `mel_norm` is the normalized target, shape
/// (n_mels, T). With `with_grad`, parameter gradients accumulate in place.
#[allow(clippy::too_many_arguments)]
pub fn item_loss(
    model: &mut Model,
    tokens: &[usize],
    speaker: usize,
    language: usize,
    mel_norm: &Array2<f64>,
    sigma_min: f64,
    mode: DrawMode,
    train: bool,
    rng: &mut Prng,
    with_grad: bool,
) -> Result<LossParts, ModelError> {
    if !mel_norm.iter().all(|v| v.is_finite()) {
        return Err(ModelError::NonFiniteInput("mel target".into()));
    }
    let t_frames = mel_norm.ncols();

    let (enc_out, mu, enc_cache) = model.encode(tokens, train, rng, with_grad)?;

    let durations = match &mode {
        DrawMode::Sample => monotonic_align(&mu, mel_norm)?,
        DrawMode::Frozen(d) => {
            assert_eq!(
                d.durations.iter().sum::<usize>(),
                t_frames,
                "frozen durations must cover the mel"
            );
            d.durations.clone()
        }
    };

    let dur_input = match &mode {
        DrawMode::Sample => &enc_out,
        DrawMode::Frozen(d) => {
            assert_eq!(
                d.duration_input.dim(),
                enc_out.dim(),
                "frozen duration input must match the encoder output"
            );
            &d.duration_input
        }
    };
    let (log_pred, dur_cache) = model.predict_log_durations(dur_input, train, rng, with_grad);
    let log_target = Array1::from_iter(durations.iter().map(|&d| (d as f64).ln()));
    let n_tokens = tokens.len() as f64;
    let duration_loss = (&log_pred - &log_target).mapv(|v| v * v).sum() / n_tokens;

    let (cond, reg_cache) = model.regulate(&enc_out, &durations, speaker, language, with_grad);

    let x1 = mel_norm.t().to_owned();
    let (t, x0) = match &mode {
        DrawMode::Sample => (
            rng.uniform::<f64>(),
            rng.normal_array2::<f64>((t_frames, mel_norm.nrows()), 1.0),
        ),
        DrawMode::Frozen(d) => {
            assert_eq!(d.x0.dim(), x1.dim(), "frozen noise must match the mel");
            (d.t, d.x0.clone())
        }
    };
    let (xt, u) = flow_pair(&x0, &x1, t, sigma_min);
    let (v, dec_cache) = model.decode_field(&xt, t, &cond, train, rng, with_grad);
    let n_cells = (x1.nrows() * x1.ncols()) as f64;
    let cfm = (&v - &u).mapv(|e| e * e).sum() / n_cells;

    let mu_rep = repeat_rows(&mu, &durations);
    let prior = 0.5 * (&mu_rep - &x1).mapv(|e| e * e).sum() / n_cells;

    if with_grad {
        let dv = (&v - &u) * (2.0 / n_cells);
        let dcond = model.decode_backward(&dec_cache.expect("decode cache"), &dv);
        let denc_from_reg = model.regulate_backward(&reg_cache.expect("regulate cache"), &dcond);

        let dmu_rep = (&mu_rep - &x1) / n_cells;
        let dmu = scatter_rows(&dmu_rep, &durations, tokens.len());

        let dlog = (&log_pred - &log_target) * (2.0 / n_tokens);
        model.duration_backward(&dur_cache.expect("duration cache"), &dlog);

        model.encode_backward(&enc_cache.expect("encode cache"), &denc_from_reg, &dmu);
    }

    Ok(LossParts {
        cfm,
        duration: duration_loss,
        prior,
    })
}
