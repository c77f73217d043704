//! Binary on-disk cache for extracted mel values.
//!
//! Layout: 16-byte header — magic `MELC`, format version, band count, frame
//! count, all little-endian u32 — followed by row-major float32 values.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::DspError;

const MAGIC: [u8; 4] = *b"MELC";
const VERSION: u32 = 1;

pub fn write_mel_cache(path: impl AsRef<Path>, values: ArrayView2<f64>) -> Result<(), DspError> {
    if !values.iter().all(|v| v.is_finite()) {
        return Err(DspError::NonFinite {
            context: "mel cache write",
        });
    }
    let (n_mels, frames) = values.dim();
    let mut bytes = Vec::with_capacity(16 + n_mels * frames * 4);
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(n_mels as u32).to_le_bytes());
    bytes.extend_from_slice(&(frames as u32).to_le_bytes());
    for row in values.rows() {
        for &v in row {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_mel_cache(path: impl AsRef<Path>) -> Result<Array2<f64>, DspError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 {
        return Err(DspError::Cache(format!(
            "file is {} bytes, header needs 16",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(DspError::Cache("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(DspError::Cache(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let n_mels = word(8) as usize;
    let frames = word(12) as usize;
    let want = 16 + n_mels * frames * 4;
    if bytes.len() != want {
        return Err(DspError::Cache(format!(
            "expected {want} bytes for {n_mels}x{frames}, got {}",
            bytes.len()
        )));
    }
    let mut values = Array2::zeros((n_mels, frames));
    for (i, v) in values.iter_mut().enumerate() {
        let at = 16 + i * 4;
        *v = f64::from(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()));
    }
    Ok(values)
}
