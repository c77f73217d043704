//! Error type for the evaluation suite.

use mel_dsp::DspError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("sample rate {got} Hz, expected {want} Hz")]
    RateMismatch { got: u32, want: u32 },
    #[error("waveform too short for analysis: {len} samples, need {need}")]
    ShortWaveform { len: usize, need: usize },
    #[error("no frames voiced in both tracks")]
    NoCoVoicedFrames,
    #[error("too few analysis frames: got {got}, need {need}")]
    TooFewFrames { got: usize, need: usize },
    #[error("sets need at least {need} items, got {got}")]
    SmallSet { need: usize, got: usize },
    #[error("no synthesized counterpart for {0}")]
    MissingCounterpart(String),
    #[error("empty test set")]
    EmptyTestset,
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
