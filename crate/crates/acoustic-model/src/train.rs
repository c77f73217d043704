//! Training loop: per-channel mel normalization, shuffled batches with
//! per-item gradient accumulation, Adam with a cosine learning-rate
//! schedule, and hard failure on any non-finite loss or parameter.

use ndarray::{Array1, Array2};
use nnet::{zero_grads, Adam, Module, Prng};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::loss::{item_loss, DrawMode};
use crate::model::Model;

/// One training utterance: token ids plus its raw (unnormalized) mel,
/// shape (n_mels, T).
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub tokens: Vec<usize>,
    pub speaker: usize,
    pub language: usize,
    pub mel: Array2<f64>,
}

/// Per-channel mean and standard deviation of the training mels.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl MelStats {
    /// Pools every frame of every item; std is clamped away from zero so
    /// constant channels stay usable.
    pub fn from_items(items: &[TrainItem]) -> Result<Self, ModelError> {
        let n_mels = items
            .first()
            .ok_or_else(|| ModelError::BadConfig("no training items".into()))?
            .mel
            .nrows();
        let mut sum = Array1::<f64>::zeros(n_mels);
        let mut sum_sq = Array1::<f64>::zeros(n_mels);
        let mut frames = 0usize;
        for item in items {
            if item.mel.nrows() != n_mels {
                return Err(ModelError::BadConfig(format!(
                    "mel rows {} != {}",
                    item.mel.nrows(),
                    n_mels
                )));
            }
            for (c, row) in item.mel.outer_iter().enumerate() {
                for &v in row {
                    sum[c] += v;
                    sum_sq[c] += v * v;
                }
            }
            frames += item.mel.ncols();
        }
        let n = frames as f64;
        let mean = sum.mapv(|s| s / n);
        let std = sum_sq
            .iter()
            .zip(mean.iter())
            .map(|(&sq, &m)| (sq / n - m * m).max(0.0).sqrt().max(1e-3))
            .collect();
        Ok(MelStats {
            mean: mean.to_vec(),
            std,
        })
    }

    pub fn normalize(&self, mel: &Array2<f64>) -> Array2<f64> {
        let mut out = mel.clone();
        for (c, mut row) in out.outer_iter_mut().enumerate() {
            let (m, s) = (self.mean[c], self.std[c]);
            row.mapv_inplace(|v| (v - m) / s);
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub sigma_min: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            epochs: 200,
            batch_size: 8,
            sigma_min: 1e-4,
            seed: 0,
        }
    }
}

pub struct Trainer {
    pub model: Model,
    pub stats: MelStats,
    pub config: TrainConfig,
    pub epoch: usize,
    pub step: u64,
    pub adam: Adam<f64>,
    rng: Prng,
}

impl Trainer {
    pub fn new(model: Model, config: TrainConfig, items: &[TrainItem]) -> Result<Self, ModelError> {
        let stats = MelStats::from_items(items)?;
        let rng = Prng::seed(config.seed);
        Ok(Trainer {
            model,
            stats,
            config,
            epoch: 0,
            step: 0,
            adam: Adam::new(),
            rng,
        })
    }

    /// One pass over `items` in a fresh shuffled order; returns the mean
    /// total loss across items.
    pub fn train_epoch(&mut self, items: &[TrainItem]) -> Result<f64, ModelError> {
        if items.is_empty() {
            return Err(ModelError::BadConfig("no training items".into()));
        }
        let lr = nnet::cosine_lr(self.config.learning_rate, self.epoch, self.config.epochs);
        let mut order: Vec<usize> = (0..items.len()).collect();
        self.rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        for chunk in order.chunks(self.config.batch_size.max(1)) {
            zero_grads(&mut self.model);
            for &idx in chunk {
                let item = &items[idx];
                let mel_norm = self.stats.normalize(&item.mel);
                let parts = item_loss(
                    &mut self.model,
                    &item.tokens,
                    item.speaker,
                    item.language,
                    &mel_norm,
                    self.config.sigma_min,
                    DrawMode::Sample,
                    true,
                    &mut self.rng,
                    true,
                )?;
                if !parts.total().is_finite() {
                    return Err(ModelError::NonFiniteLoss {
                        epoch: self.epoch,
                        step: self.step as usize,
                        detail: format!(
                            "cfm={} duration={} prior={}",
                            parts.cfm, parts.duration, parts.prior
                        ),
                    });
                }
                loss_sum += parts.total();
            }

            let scale = 1.0 / chunk.len() as f64;
            self.model.for_each_param("", &mut |_, t| {
                t.g.mapv_inplace(|g| g * scale);
            });
            self.adam.step(&mut self.model, lr);
            self.step += 1;

            let mut bad: Option<String> = None;
            self.model.for_each_param("", &mut |name, t| {
                if bad.is_none() && !t.v.iter().all(|v| v.is_finite()) {
                    bad = Some(name.to_string());
                }
            });
            if let Some(name) = bad {
                return Err(ModelError::NonFiniteParam {
                    name,
                    step: self.step as usize,
                });
            }
        }
        self.epoch += 1;
        Ok(loss_sum / items.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use nnet::param_index;
    use seqmix::MixerKind;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            mixer: MixerKind::Fnet,
            vocab_size: 9,
            n_speakers: 3,
            n_languages: 2,
            speaker_emb_dim: 6,
            language_emb_dim: 4,
            enc_hidden: 12,
            enc_filter: 16,
            enc_blocks: 1,
            enc_dropout: 0.1,
            dur_filter: 8,
            dec_in: 6,
            dec_out: 80,
            dec_hidden: 12,
            dec_blocks: 1,
            time_emb_dim: 8,
        }
    }

    fn items(rng: &mut Prng) -> Vec<TrainItem> {
        (0..2)
            .map(|i| TrainItem {
                tokens: vec![1 + i, 3, 5],
                speaker: i,
                language: i % 2,
                mel: rng.normal_array2((80, 6 + i), 1.0),
            })
            .collect()
    }

    #[test]
    fn stats_normalize_to_zero_mean_unit_std() {
        let mut rng = Prng::seed(11);
        let items = items(&mut rng);
        let stats = MelStats::from_items(&items).unwrap();
        assert_eq!(stats.mean.len(), 80);

        let frames: usize = items.iter().map(|i| i.mel.ncols()).sum();
        let mut pooled = Array2::zeros((80, frames));
        let mut col = 0;
        for item in &items {
            let normed = stats.normalize(&item.mel);
            pooled
                .slice_mut(ndarray::s![.., col..col + normed.ncols()])
                .assign(&normed);
            col += normed.ncols();
        }
        for row in pooled.outer_iter() {
            let m = row.mean().unwrap();
            let var = row.mapv(|v| (v - m) * (v - m)).mean().unwrap();
            assert!(m.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_channel_keeps_a_floored_std() {
        let mut mel = Array2::zeros((80, 5));
        mel.row_mut(3).fill(2.5);
        let items = vec![TrainItem {
            tokens: vec![1],
            speaker: 0,
            language: 0,
            mel,
        }];
        let stats = MelStats::from_items(&items).unwrap();
        assert_eq!(stats.std[3], 1e-3);
        assert!((stats.mean[3] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn one_epoch_advances_counters_and_returns_finite_loss() {
        let mut rng = Prng::seed(12);
        let items = items(&mut rng);
        let model = Model::new(tiny_cfg(), &mut Prng::seed(7)).unwrap();
        let mut trainer = Trainer::new(model, TrainConfig::default(), &items).unwrap();
        let loss = trainer.train_epoch(&items).unwrap();
        assert!(loss.is_finite() && loss > 0.0);
        assert_eq!(trainer.epoch, 1);
        // 2 items with batch_size 8 -> a single optimizer step.
        assert_eq!(trainer.step, 1);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_untouched() {
        let mut rng = Prng::seed(13);
        let items = items(&mut rng);
        let mut model = Model::new(tiny_cfg(), &mut Prng::seed(7)).unwrap();
        let index = param_index(&mut model);
        let before: Vec<f64> = {
            let mut vals = Vec::new();
            model.for_each_param("", &mut |_, t| vals.extend(t.v.iter().copied()));
            vals
        };
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(model, cfg, &items).unwrap();
        trainer.train_epoch(&items).unwrap();
        let mut after = Vec::new();
        trainer.model.for_each_param("", &mut |_, t| {
            after.extend(t.v.iter().copied())
        });
        assert_eq!(before, after);
        assert!(!index.is_empty());
    }

    #[test]
    fn a_few_epochs_decrease_the_loss_on_a_tiny_corpus() {
        let mut rng = Prng::seed(14);
        let items = items(&mut rng);
        let model = Model::new(tiny_cfg(), &mut Prng::seed(8)).unwrap();
        let cfg = TrainConfig {
            learning_rate: 3e-3,
            epochs: 30,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(model, cfg, &items).unwrap();
        let mut first = 0.0;
        let mut window = Vec::new();
        for e in 0..30 {
            let loss = trainer.train_epoch(&items).unwrap();
            if e == 0 {
                first = loss;
            }
            if e >= 25 {
                window.push(loss);
            }
        }
        let tail = window.iter().sum::<f64>() / window.len() as f64;
        assert!(tail < first, "loss should drop: first {first}, tail {tail}");
    }
}
