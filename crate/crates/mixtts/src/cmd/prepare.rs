//! `prepare`: corpus → vocabulary, mel cache, and oversampled manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;

use anyhow::{bail, Context, Result};
use mel_dsp::{melspectrogram, read_wav, MelConfig};
use text_frontend::{build_vocab, load_manifest, oversample, Registry, UtteranceRecord};

use crate::config::RunConfig;
use crate::corpus::generate_corpus;
use crate::data::mel_cache_name;
use crate::record::{log_kv, RunRecord};

/// Writes the oversampled manifest back in the input format, which needs the
/// registry's id→name direction.
fn manifest_text(records: &[UtteranceRecord], registry: &Registry) -> String {
    let speaker_names: BTreeMap<usize, &str> = registry
        .speakers
        .iter()
        .map(|(name, id)| (*id, name.as_str()))
        .collect();
    let language_names: BTreeMap<usize, &str> = registry
        .languages
        .iter()
        .map(|(name, info)| (info.id, name.as_str()))
        .collect();
    let mut out = String::new();
    for rec in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            rec.audio_path, speaker_names[&rec.speaker_id], language_names[&rec.language_id], rec.text,
        );
    }
    out
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let (manifest_path, registry_path) = if cfg.synthetic {
        let paths = generate_corpus(&cfg.out.join("corpus"), cfg.seed)?;
        (paths.manifest, paths.registry)
    } else {
        match (&cfg.manifest, &cfg.registry) {
            (Some(m), Some(r)) => (m.clone(), r.clone()),
            _ => bail!("prepare needs --manifest and --registry (or --synthetic)"),
        }
    };

    let registry = Registry::load(&registry_path)
        .with_context(|| format!("loading registry {}", registry_path.display()))?;
    let records = load_manifest(&manifest_path, &registry, |p| {
        mel_dsp::wav_duration_s(p).map_err(|e| e.to_string())
    })
    .with_context(|| format!("loading manifest {}", manifest_path.display()))?;

    let vocab = build_vocab(&records, &registry).context("building vocabulary")?;
    let vocab_path = cfg.out.join("vocab.txt");
    vocab
        .save(&vocab_path)
        .with_context(|| format!("writing {}", vocab_path.display()))?;

    let mel_dir = cfg.out.join("mels");
    fs::create_dir_all(&mel_dir)
        .with_context(|| format!("creating {}", mel_dir.display()))?;
    let mel_cfg = MelConfig::default();
    let mut cached = std::collections::BTreeSet::new();
    for rec in &records {
        if !cached.insert(rec.audio_path.clone()) {
            continue;
        }
        let wave = read_wav(&rec.audio_path)
            .with_context(|| format!("reading {}", rec.audio_path))?;
        let mel = melspectrogram(&wave, &mel_cfg)
            .with_context(|| format!("extracting mel for {}", rec.audio_path))?;
        let path = mel_dir.join(mel_cache_name(&rec.audio_path));
        mel_dsp::write_mel_cache(&path, mel.values.view())
            .with_context(|| format!("writing {}", path.display()))?;
    }

    let balanced = oversample(&records).context("oversampling")?;
    let out_manifest = cfg.out.join("manifest.tsv");
    fs::write(&out_manifest, manifest_text(&balanced, &registry))
        .with_context(|| format!("writing {}", out_manifest.display()))?;
    let out_registry = cfg.out.join("registry.toml");
    fs::write(&out_registry, registry.to_toml())
        .with_context(|| format!("writing {}", out_registry.display()))?;

    log_kv(
        "prepare",
        &[
            ("utterances", records.len().to_string()),
            ("oversampled", balanced.len().to_string()),
            ("vocab_chars", vocab.len().to_string()),
            ("mels", cached.len().to_string()),
        ],
    );

    let mut rec = RunRecord::new("prepare");
    for (k, v) in cfg.echo() {
        rec.push(&format!("config.{k}"), v);
    }
    rec.push_hash("vocab", &vocab_path)?;
    rec.push_hash("manifest", &out_manifest)?;
    rec.write(&cfg.out)
}
