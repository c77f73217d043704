//! Audio plumbing for the synthesizer: WAV I/O, band-limited resampling,
//! log-mel spectrogram extraction, a Griffin–Lim inverse for audible output,
//! and a compact binary cache for extracted mels.

pub mod cache;
pub mod error;
pub mod griffin_lim;
pub mod mel;
pub mod resample;
pub mod stft;
pub mod wave;

pub use cache::{read_mel_cache, write_mel_cache};
pub use error::DspError;
pub use griffin_lim::griffin_lim_invert;
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, melspectrogram, MelConfig, MelSpectrogram};
pub use resample::resample;
pub use stft::{hann_window, stft_magnitude};
pub use wave::{read_wav, wav_duration_s, write_wav, Waveform};
