//! Character-level text frontend: speaker/language registry, punctuation
//! filtering with a per-language apostrophe exception, vocabulary building,
//! manifest loading, and duration-balancing oversampling.

pub mod error;
pub mod manifest;
pub mod oversample;
pub mod registry;
pub mod tokenizer;

pub use error::FrontendError;
pub use manifest::{load_manifest, parse_manifest, UtteranceRecord};
pub use oversample::oversample;
pub use registry::{LanguageInfo, Registry};
pub use tokenizer::{build_vocab, detokenize, filter_text, tokenize, CharVocab, TokenSequence};

#[cfg(test)]
pub(crate) mod fixtures {
    pub(crate) const REGISTRY_TOML: &str = r#"
[speakers]
JJ = 0
MJ = 1

[languages.mikmaq]
id = 0
apostrophe_preserving = false

[languages.ojibwe]
id = 1
apostrophe_preserving = true
"#;

    pub(crate) fn registry() -> crate::Registry {
        crate::Registry::from_toml(REGISTRY_TOML).unwrap()
    }
}
