//! Binary checkpoints: a JSON metadata header followed by a named f32
//! parameter table in traversal order, plus optional optimizer state.
//!
//! Layout: magic `MXTTS1`, u32 metadata length, metadata JSON, u32 parameter
//! count, then per parameter a u16-length name, u8 rank, u32 dims, and f32
//! little-endian values. A trailing u8 flags optimizer state: u64 step count
//! followed by first/second moment arrays per parameter, same shapes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::ArrayD;
use nnet::{Adam, Module, Prng};
use serde::{Deserialize, Serialize};
use text_frontend::Registry;

use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::model::Model;

const MAGIC: &[u8; 6] = b"MXTTS1";

/// Everything needed to rebuild and use the model besides the weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: ModelConfig,
    /// Vocabulary in its text file encoding.
    pub vocab: String,
    pub registry: Registry,
    pub mel_mean: Vec<f64>,
    pub mel_std: Vec<f64>,
    pub epoch: usize,
    pub step: u64,
}

pub struct LoadedCheckpoint {
    pub model: Model,
    pub meta: CheckpointMeta,
    pub adam: Option<Adam<f64>>,
}

fn write_f32s<W: Write>(w: &mut W, values: impl Iterator<Item = f64>) -> std::io::Result<()> {
    for v in values {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> std::io::Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn save_checkpoint(
    path: &Path,
    model: &mut Model,
    meta: &CheckpointMeta,
    adam: Option<&Adam<f64>>,
) -> Result<(), ModelError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    let meta_json = serde_json::to_vec(meta)?;
    out.write_all(&(meta_json.len() as u32).to_le_bytes())?;
    out.write_all(&meta_json)?;

    let mut table: Vec<(String, Vec<usize>, Vec<f64>)> = Vec::new();
    model.for_each_param("", &mut |name, t| {
        table.push((
            name.to_string(),
            t.v.shape().to_vec(),
            t.v.iter().copied().collect(),
        ));
    });
    out.write_all(&(table.len() as u32).to_le_bytes())?;
    for (name, shape, values) in &table {
        let name_bytes = name.as_bytes();
        out.write_all(&(name_bytes.len() as u16).to_le_bytes())?;
        out.write_all(name_bytes)?;
        out.write_all(&[shape.len() as u8])?;
        for &d in shape {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        write_f32s(&mut out, values.iter().copied())?;
    }

    match adam {
        Some(opt) if !opt.moments().0.is_empty() => {
            let (m, v) = opt.moments();
            if m.len() != table.len() {
                return Err(ModelError::Checkpoint(format!(
                    "optimizer tracks {} tensors, model has {}",
                    m.len(),
                    table.len()
                )));
            }
            out.write_all(&[1u8])?;
            out.write_all(&opt.t.to_le_bytes())?;
            for (mi, vi) in m.iter().zip(v.iter()) {
                write_f32s(&mut out, mi.iter().copied())?;
                write_f32s(&mut out, vi.iter().copied())?;
            }
        }
        _ => out.write_all(&[0u8])?,
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint, ModelError> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 6];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Checkpoint(format!(
            "bad magic {:02x?}",
            magic
        )));
    }
    let meta_len = read_u32(&mut input)? as usize;
    let mut meta_bytes = vec![0u8; meta_len];
    input.read_exact(&mut meta_bytes)?;
    let meta: CheckpointMeta = serde_json::from_slice(&meta_bytes)?;

    let n_params = read_u32(&mut input)? as usize;
    let mut table: Vec<(String, Vec<usize>, Vec<f64>)> = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        let mut len_b = [0u8; 2];
        input.read_exact(&mut len_b)?;
        let mut name_bytes = vec![0u8; u16::from_le_bytes(len_b) as usize];
        input.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|e| ModelError::Checkpoint(format!("parameter name: {e}")))?;
        let mut rank = [0u8; 1];
        input.read_exact(&mut rank)?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            shape.push(read_u32(&mut input)? as usize);
        }
        let count: usize = shape.iter().product();
        let values = read_f32s(&mut input, count)?;
        table.push((name, shape, values));
    }

    let mut model = Model::new(meta.config.clone(), &mut Prng::seed(0))?;
    let mut cursor = 0usize;
    let mut mismatch: Option<String> = None;
    model.for_each_param("", &mut |name, t| {
        if mismatch.is_some() {
            return;
        }
        let Some((file_name, shape, values)) = table.get(cursor) else {
            mismatch = Some(format!("checkpoint ends before parameter {name}"));
            return;
        };
        if file_name != name {
            mismatch = Some(format!("expected parameter {name}, found {file_name}"));
            return;
        }
        if shape != t.v.shape() {
            mismatch = Some(format!(
                "parameter {name}: shape {:?} in file, {:?} in model",
                shape,
                t.v.shape()
            ));
            return;
        }
        for (slot, &v) in t.v.iter_mut().zip(values.iter()) {
            *slot = v;
        }
        cursor += 1;
    });
    if let Some(msg) = mismatch {
        return Err(ModelError::Checkpoint(msg));
    }
    if cursor != table.len() {
        return Err(ModelError::Checkpoint(format!(
            "checkpoint has {} parameters, model consumed {cursor}",
            table.len()
        )));
    }

    let mut flag = [0u8; 1];
    input.read_exact(&mut flag)?;
    let adam = if flag[0] == 1 {
        let mut t_bytes = [0u8; 8];
        input.read_exact(&mut t_bytes)?;
        let t = u64::from_le_bytes(t_bytes);
        let mut m = Vec::with_capacity(table.len());
        let mut v = Vec::with_capacity(table.len());
        for (_, shape, _) in &table {
            let count: usize = shape.iter().product();
            let dim = ndarray::IxDyn(shape);
            let mi = read_f32s(&mut input, count)?;
            let vi = read_f32s(&mut input, count)?;
            m.push(
                ArrayD::from_shape_vec(dim.clone(), mi)
                    .map_err(|e| ModelError::Checkpoint(e.to_string()))?,
            );
            v.push(
                ArrayD::from_shape_vec(dim, vi)
                    .map_err(|e| ModelError::Checkpoint(e.to_string()))?,
            );
        }
        let mut opt = Adam::new();
        opt.restore(t, m, v);
        Some(opt)
    } else {
        None
    };

    Ok(LoadedCheckpoint { model, meta, adam })
}
