//! Error type shared by the audio and spectrogram routines.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("waveform has {len} samples but one analysis window needs {win}")]
    ShortWaveform { len: usize, win: usize },
    #[error("{context}: non-finite value encountered")]
    NonFinite { context: &'static str },
    #[error("sample rate {got} Hz does not match the configured {want} Hz")]
    RateMismatch { got: u32, want: u32 },
    #[error("invalid analysis config: {0}")]
    Config(String),
    #[error("mel cache: {0}")]
    Cache(String),
    #[error("unsupported wav layout: {0}")]
    WavLayout(String),
    #[error(transparent)]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
