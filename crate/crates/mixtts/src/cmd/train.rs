//! `train`: fit the acoustic model on a prepared directory and write a
//! checkpoint series.

use anyhow::{bail, Context, Result};
use acoustic_model::{save_checkpoint, CheckpointMeta, Model, ModelConfig, TrainConfig, Trainer};
use nnet::Prng;

use crate::config::RunConfig;
use crate::data::{load_prepared, train_items};
use crate::record::{log_kv, RunRecord};

pub fn model_config(cfg: &RunConfig, vocab_size: usize, n_speakers: usize, n_languages: usize) -> ModelConfig {
    if cfg.desk_scale {
        ModelConfig::desk(cfg.mixer, vocab_size, n_speakers, n_languages)
    } else {
        ModelConfig::full(cfg.mixer, vocab_size, n_speakers, n_languages)
    }
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let Some(data_dir) = &cfg.data else {
        bail!("train needs --data pointing at a prepared directory");
    };
    let data = load_prepared(data_dir)?;
    let items = train_items(&data)?;
    log_kv("dataset", &[("items", items.len().to_string())]);

    let mcfg = model_config(
        cfg,
        data.vocab.table_size(),
        data.registry.n_speakers(),
        data.registry.n_languages(),
    );
    let model = Model::new(mcfg.clone(), &mut Prng::seed(cfg.seed)).context("building model")?;
    let tcfg = TrainConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        sigma_min: cfg.sigma_min,
        seed: cfg.seed,
    };
    let mut trainer = Trainer::new(model, tcfg, &items).context("starting trainer")?;

    let meta = |trainer: &Trainer| CheckpointMeta {
        config: mcfg.clone(),
        vocab: data.vocab.to_file_string(),
        registry: data.registry.clone(),
        mel_mean: trainer.stats.mean.clone(),
        mel_std: trainer.stats.std.clone(),
        epoch: trainer.epoch,
        step: trainer.step,
    };

    for epoch in 1..=cfg.epochs {
        let loss = trainer
            .train_epoch(&items)
            .with_context(|| format!("epoch {epoch}"))?;
        log_kv(
            "epoch",
            &[("epoch", epoch.to_string()), ("loss", format!("{loss:.6}"))],
        );
        if cfg.save_every > 0 && epoch % cfg.save_every == 0 && epoch < cfg.epochs {
            let path = cfg.out.join(format!("checkpoint_epoch{epoch:04}.bin"));
            let m = meta(&trainer);
            save_checkpoint(&path, &mut trainer.model, &m, Some(&trainer.adam))
                .with_context(|| format!("saving {}", path.display()))?;
            log_kv("checkpoint", &[("path", path.display().to_string())]);
        }
    }

    let final_path = cfg.out.join("checkpoint_final.bin");
    let m = meta(&trainer);
    save_checkpoint(&final_path, &mut trainer.model, &m, Some(&trainer.adam))
        .with_context(|| format!("saving {}", final_path.display()))?;
    log_kv(
        "checkpoint",
        &[("path", final_path.display().to_string()), ("final", "true".into())],
    );

    let mut rec = RunRecord::new("train");
    for (k, v) in cfg.echo() {
        rec.push(&format!("config.{k}"), v);
    }
    rec.push("epochs_run", trainer.epoch);
    rec.push("steps_run", trainer.step);
    rec.push_hash("checkpoint", &final_path)?;
    rec.write(&cfg.out)
}
