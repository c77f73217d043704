//! Character tokenizer: NFC-normalize, lowercase, strip punctuation (with a
//! per-language apostrophe exception), and map the survivors to contiguous
//! integer IDs. Unknown characters are a hard error — silent data loss is
//! worse than a failed run on a small corpus.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::path::Path;

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

use crate::error::FrontendError;
use crate::manifest::UtteranceRecord;
use crate::registry::Registry;

/// True for every Unicode punctuation category (P*).
fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Normalize (NFC), lowercase, and drop punctuation. The apostrophe
/// (U+0027) survives iff `keep_apostrophe`.
pub fn filter_text(text: &str, keep_apostrophe: bool) -> String {
    text.nfc()
        .flat_map(char::to_lowercase)
        .filter(|&c| {
            if c == '\'' {
                keep_apostrophe
            } else {
                !is_punctuation(c)
            }
        })
        .collect()
}

/// Ordered character set with contiguous IDs. The padding ID sits one past
/// the last real symbol and never maps to corpus text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharVocab {
    symbols: Vec<char>,
    id_of: HashMap<char, usize>,
}

impl CharVocab {
    fn from_symbols(symbols: Vec<char>) -> Self {
        let id_of = symbols.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        Self { symbols, id_of }
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn id_of(&self, c: char) -> Option<usize> {
        self.id_of.get(&c).copied()
    }

    /// ID reserved for padding; one past the real symbols.
    pub fn pad_id(&self) -> usize {
        self.symbols.len()
    }

    /// Table size including the padding row.
    pub fn table_size(&self) -> usize {
        self.symbols.len() + 1
    }

    /// One lowercase-hex codepoint per line.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for c in &self.symbols {
            out.push_str(&format!("{:x}\n", *c as u32));
        }
        out
    }

    pub fn from_file_string(text: &str) -> Result<Self, FrontendError> {
        let mut symbols = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let code = u32::from_str_radix(line, 16).map_err(|e| FrontendError::VocabFile {
                line: i + 1,
                message: e.to_string(),
            })?;
            let c = char::from_u32(code).ok_or_else(|| FrontendError::VocabFile {
                line: i + 1,
                message: format!("invalid codepoint {code:#x}"),
            })?;
            symbols.push(c);
        }
        if symbols.is_empty() {
            return Err(FrontendError::VocabFile {
                line: 0,
                message: "no symbols".into(),
            });
        }
        Ok(Self::from_symbols(symbols))
    }

    pub fn save(&self, path: &Path) -> Result<(), FrontendError> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FrontendError> {
        Self::from_file_string(&std::fs::read_to_string(path)?)
    }
}

/// Collect the sorted set of characters that survive per-language filtering
/// across the whole corpus.
pub fn build_vocab(
    records: &[UtteranceRecord],
    registry: &Registry,
) -> Result<CharVocab, FrontendError> {
    if records.is_empty() {
        return Err(FrontendError::EmptyCorpus);
    }
    let mut set = BTreeSet::new();
    for rec in records {
        let keep = registry.apostrophe_preserving(rec.language_id)?;
        set.extend(filter_text(&rec.text, keep).chars());
    }
    Ok(CharVocab::from_symbols(set.into_iter().collect()))
}

/// Token IDs plus the conditioning labels they travel with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<usize>,
    pub language_id: usize,
    pub speaker_id: usize,
}

pub fn tokenize(
    text: &str,
    language_id: usize,
    speaker_id: usize,
    vocab: &CharVocab,
    registry: &Registry,
) -> Result<TokenSequence, FrontendError> {
    let keep = registry.apostrophe_preserving(language_id)?;
    let filtered = filter_text(text, keep);
    let mut ids = Vec::with_capacity(filtered.len());
    for (index, ch) in filtered.chars().enumerate() {
        match vocab.id_of(ch) {
            Some(id) => ids.push(id),
            None => {
                return Err(FrontendError::UnknownChar {
                    ch,
                    code: ch as u32,
                    index,
                })
            }
        }
    }
    if ids.is_empty() {
        return Err(FrontendError::EmptyTokens {
            text: text.to_string(),
        });
    }
    Ok(TokenSequence {
        ids,
        language_id,
        speaker_id,
    })
}

/// Inverse of [`tokenize`] on the filtered text.
pub fn detokenize(vocab: &CharVocab, ids: &[usize]) -> String {
    ids.iter().map(|&i| vocab.symbols()[i]).collect()
}
