//! Speaker and language registry: human-readable TOML mapping names to
//! contiguous integer IDs, with per-language tokenizer flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::FrontendError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageInfo {
    pub id: usize,
    /// Keep U+0027 during punctuation filtering for this language.
    pub apostrophe_preserving: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    pub speakers: BTreeMap<String, usize>,
    pub languages: BTreeMap<String, LanguageInfo>,
}

impl Registry {
    pub fn from_toml(text: &str) -> Result<Self, FrontendError> {
        let reg: Registry =
            toml::from_str(text).map_err(|e| FrontendError::Registry(e.to_string()))?;
        reg.validate()?;
        Ok(reg)
    }

    pub fn load(path: &Path) -> Result<Self, FrontendError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("registry serializes")
    }

    fn validate(&self) -> Result<(), FrontendError> {
        if self.speakers.is_empty() {
            return Err(FrontendError::Registry("no speakers registered".into()));
        }
        if self.languages.is_empty() {
            return Err(FrontendError::Registry("no languages registered".into()));
        }
        let mut speaker_ids: Vec<usize> = self.speakers.values().copied().collect();
        speaker_ids.sort_unstable();
        if speaker_ids != (0..speaker_ids.len()).collect::<Vec<_>>() {
            return Err(FrontendError::Registry(
                "speaker ids must be contiguous from 0".into(),
            ));
        }
        let mut language_ids: Vec<usize> = self.languages.values().map(|l| l.id).collect();
        language_ids.sort_unstable();
        if language_ids != (0..language_ids.len()).collect::<Vec<_>>() {
            return Err(FrontendError::Registry(
                "language ids must be contiguous from 0".into(),
            ));
        }
        Ok(())
    }

    pub fn n_speakers(&self) -> usize {
        self.speakers.len()
    }

    pub fn n_languages(&self) -> usize {
        self.languages.len()
    }

    pub fn speaker_id(&self, name: &str) -> Result<usize, FrontendError> {
        self.speakers
            .get(name)
            .copied()
            .ok_or_else(|| FrontendError::UnknownSpeaker(name.to_string()))
    }

    pub fn language(&self, name: &str) -> Result<LanguageInfo, FrontendError> {
        self.languages
            .get(name)
            .copied()
            .ok_or_else(|| FrontendError::UnknownLanguage(name.to_string()))
    }

    pub fn apostrophe_preserving(&self, language_id: usize) -> Result<bool, FrontendError> {
        self.languages
            .values()
            .find(|l| l.id == language_id)
            .map(|l| l.apostrophe_preserving)
            .ok_or(FrontendError::UnknownLanguageId(language_id))
    }
}
