//! `synth`: one WAV and one mel cache file per input text line.

use std::fs;

use acoustic_model::{load_checkpoint, MelStats};
use anyhow::{bail, Context, Result};
use mel_dsp::{griffin_lim_invert, write_mel_cache, write_wav, MelConfig, MelSpectrogram};
use text_frontend::{tokenize, CharVocab};

use crate::config::RunConfig;
use crate::record::{log_kv, RunRecord};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let Some(ckpt_path) = &cfg.checkpoint else {
        bail!("synth needs --checkpoint");
    };
    let Some(text_path) = &cfg.text else {
        bail!("synth needs --text with one utterance per line");
    };

    let loaded = load_checkpoint(ckpt_path)
        .with_context(|| format!("loading checkpoint {}", ckpt_path.display()))?;
    let vocab = CharVocab::from_file_string(&loaded.meta.vocab)
        .context("decoding checkpoint vocabulary")?;
    let registry = &loaded.meta.registry;
    let stats = MelStats {
        mean: loaded.meta.mel_mean.clone(),
        std: loaded.meta.mel_std.clone(),
    };

    let speaker_id = match &cfg.speaker {
        Some(name) => registry
            .speaker_id(name)
            .with_context(|| format!("speaker {name}"))?,
        None => 0,
    };
    let language_id = match &cfg.language {
        Some(name) => {
            registry
                .language(name)
                .with_context(|| format!("language {name}"))?
                .id
        }
        None => 0,
    };

    let text = fs::read_to_string(text_path)
        .with_context(|| format!("reading {}", text_path.display()))?;
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating {}", cfg.out.display()))?;

    let mut rec = RunRecord::new("synth");
    for (k, v) in cfg.echo() {
        rec.push(&format!("config.{k}"), v);
    }
    rec.push_hash("checkpoint", ckpt_path)?;

    let mut produced = 0usize;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let toks = tokenize(line, language_id, speaker_id, &vocab, registry)
            .with_context(|| format!("utterance {i}: tokenizing {line:?}"))?;
        let mel = loaded
            .model
            .synthesize(
                &toks.ids,
                speaker_id,
                language_id,
                cfg.n_steps,
                cfg.seed.wrapping_add(i as u64),
                &stats,
            )
            .with_context(|| format!("utterance {i}: synthesis"))?;

        let mel_path = cfg.out.join(format!("utt_{i:03}.mel"));
        write_mel_cache(&mel_path, mel.view())
            .with_context(|| format!("utterance {i}: writing {}", mel_path.display()))?;

        let spec = MelSpectrogram {
            values: mel,
            config: MelConfig::default(),
        };
        let wave = griffin_lim_invert(&spec, 32, cfg.seed.wrapping_add(i as u64))
            .with_context(|| format!("utterance {i}: waveform reconstruction"))?;
        let wav_path = cfg.out.join(format!("utt_{i:03}.wav"));
        write_wav(&wav_path, &wave)
            .with_context(|| format!("utterance {i}: writing {}", wav_path.display()))?;

        log_kv(
            "synth",
            &[
                ("utterance", i.to_string()),
                ("frames", spec.values.ncols().to_string()),
                ("wav", wav_path.display().to_string()),
            ],
        );
        rec.push_hash(&format!("mel.{i:03}"), &mel_path)?;
        produced += 1;
    }
    if produced == 0 {
        bail!("no non-empty lines in {}", text_path.display());
    }
    rec.push("utterances", produced);
    rec.write(&cfg.out)
}
