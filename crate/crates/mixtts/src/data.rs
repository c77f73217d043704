//! Loading a prepared data directory back into training inputs.
//!
//! `prepare` writes `registry.toml`, `vocab.txt`, `manifest.tsv`, and a
//! `mels/` cache under one directory; this module is the reading side both
//! the trainer and the tests share.

use std::path::{Path, PathBuf};

use acoustic_model::TrainItem;
use anyhow::{Context, Result};
use mel_dsp::read_mel_cache;
use sha2::{Digest, Sha256};
use text_frontend::{load_manifest, tokenize, CharVocab, Registry, UtteranceRecord};

/// Cache file name for one audio path: readable stem plus a short hash of
/// the full path, so equal stems in different directories cannot collide.
pub fn mel_cache_name(audio_path: &str) -> String {
    let stem = Path::new(audio_path)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("utt");
    let mut h = Sha256::new();
    h.update(audio_path.as_bytes());
    let digest = h.finalize();
    let mut tag = String::new();
    for b in &digest[..4] {
        tag.push_str(&format!("{b:02x}"));
    }
    format!("{stem}_{tag}.mel")
}

/// Artifacts of one `prepare` run, loaded back into memory.
pub struct PreparedData {
    pub registry: Registry,
    pub vocab: CharVocab,
    pub records: Vec<UtteranceRecord>,
    pub mel_dir: PathBuf,
}

pub fn load_prepared(dir: &Path) -> Result<PreparedData> {
    let registry = Registry::load(&dir.join("registry.toml"))
        .with_context(|| format!("loading registry from {}", dir.display()))?;
    let vocab = CharVocab::load(&dir.join("vocab.txt"))
        .with_context(|| format!("loading vocabulary from {}", dir.display()))?;
    let records = load_manifest(&dir.join("manifest.tsv"), &registry, |p| {
        mel_dsp::wav_duration_s(p).map_err(|e| e.to_string())
    })
    .with_context(|| format!("loading manifest from {}", dir.display()))?;
    Ok(PreparedData {
        registry,
        vocab,
        records,
        mel_dir: dir.join("mels"),
    })
}

/// Tokenizes every record and pairs it with its cached mel.
pub fn train_items(data: &PreparedData) -> Result<Vec<TrainItem>> {
    let mut items = Vec::with_capacity(data.records.len());
    for rec in &data.records {
        let toks = tokenize(
            &rec.text,
            rec.language_id,
            rec.speaker_id,
            &data.vocab,
            &data.registry,
        )
        .with_context(|| format!("tokenizing utterance {}", rec.audio_path))?;
        let mel_path = data.mel_dir.join(mel_cache_name(&rec.audio_path));
        let mel = read_mel_cache(&mel_path)
            .with_context(|| format!("reading mel cache {}", mel_path.display()))?;
        items.push(TrainItem {
            tokens: toks.ids,
            speaker: rec.speaker_id,
            language: rec.language_id,
            mel,
        });
    }
    Ok(items)
}
