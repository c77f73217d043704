//! Error type shared across the frontend.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum FrontendError {
    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("character {ch:?} (U+{code:04X}) at index {index} is not in the vocabulary")]
    UnknownChar { ch: char, code: u32, index: usize },

    #[error("text {text:?} has no tokens left after filtering")]
    EmptyTokens { text: String },

    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("unknown speaker name {0:?}")]
    UnknownSpeaker(String),

    #[error("unknown language name {0:?}")]
    UnknownLanguage(String),

    #[error("language id {0} is not registered")]
    UnknownLanguageId(usize),

    #[error("registry: {0}")]
    Registry(String),

    #[error("vocabulary file line {line}: {message}")]
    VocabFile { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
