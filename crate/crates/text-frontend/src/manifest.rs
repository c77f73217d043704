//! Corpus manifest: UTF-8, one utterance per line,
//! `audio_path<TAB>speaker<TAB>language<TAB>text`. Durations come from the
//! audio files themselves via an injected probe, so this module needs no
//! audio decoder.

use std::path::Path;

use crate::error::FrontendError;
use crate::registry::Registry;

/// One corpus utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct UtteranceRecord {
    pub audio_path: String,
    pub speaker_id: usize,
    pub language_id: usize,
    pub text: String,
    pub duration_s: f64,
}

/// Parse manifest text. `duration_of` maps an audio path to its duration in
/// seconds (e.g. by reading the WAV header); errors it returns are reported
/// with the offending line number.
pub fn parse_manifest(
    text: &str,
    registry: &Registry,
    mut duration_of: impl FnMut(&str) -> Result<f64, String>,
) -> Result<Vec<UtteranceRecord>, FrontendError> {
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 4 {
            return Err(FrontendError::Manifest {
                line: line_no,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let (audio_path, speaker, language, text) =
            (fields[0], fields[1], fields[2], fields[3]);
        if text.trim().is_empty() {
            return Err(FrontendError::Manifest {
                line: line_no,
                message: "text field is empty".into(),
            });
        }
        let speaker_id = registry
            .speaker_id(speaker)
            .map_err(|e| FrontendError::Manifest {
                line: line_no,
                message: e.to_string(),
            })?;
        let language = registry
            .language(language)
            .map_err(|e| FrontendError::Manifest {
                line: line_no,
                message: e.to_string(),
            })?;
        let duration_s = duration_of(audio_path).map_err(|message| FrontendError::Manifest {
            line: line_no,
            message,
        })?;
        if !(duration_s > 0.0) {
            return Err(FrontendError::Manifest {
                line: line_no,
                message: format!("non-positive duration {duration_s}"),
            });
        }
        records.push(UtteranceRecord {
            audio_path: audio_path.to_string(),
            speaker_id,
            language_id: language.id,
            text: text.to_string(),
            duration_s,
        });
    }
    Ok(records)
}

/// Read and parse a manifest file.
pub fn load_manifest(
    path: &Path,
    registry: &Registry,
    duration_of: impl FnMut(&str) -> Result<f64, String>,
) -> Result<Vec<UtteranceRecord>, FrontendError> {
    parse_manifest(&std::fs::read_to_string(path)?, registry, duration_of)
}
