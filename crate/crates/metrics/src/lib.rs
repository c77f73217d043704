//! Objective evaluation of synthesized speech against references: pitch
//! accuracy, spectral and cepstral distances, intelligibility, voicing
//! agreement, and a distributional distance over pooled cepstral frames.

pub mod cepstra;
pub mod error;
pub mod fid;
pub mod mcd;
pub mod pitch;
pub mod report;
pub mod spectral;
pub mod stoi;

pub use cepstra::{mel_cepstra, N_CEPSTRA};
pub use error::MetricError;
pub use fid::{fid_from_frames, mfcc_fid};
pub use mcd::{mcd, mcd_from_cepstra};
pub use pitch::{extract_f0, f0_rmse, vuv_f1, F0Track, PITCH_FMAX, PITCH_FMIN, PITCH_RATE};
pub use report::{evaluate_testset, MetricReport, METRIC_KEYS};
pub use spectral::las_rmse;
pub use stoi::stoi;
