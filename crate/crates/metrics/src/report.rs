//! Batch evaluation over paired (reference, synthesized) waveform files and
//! the report they produce.

use std::path::{Path, PathBuf};

use mel_dsp::read_wav;

use crate::error::MetricError;
use crate::fid::mfcc_fid;
use crate::mcd::mcd;
use crate::pitch::{extract_f0, f0_rmse, vuv_f1};
use crate::spectral::las_rmse;
use crate::stoi::stoi;

/// Stable metric key names, in report column order.
pub const METRIC_KEYS: [&str; 6] = ["f0_rmse", "las_rmse", "mcd", "stoi", "vuv_f1", "mfcc_fid"];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub f0_rmse: f64,
    pub las_rmse: f64,
    pub mcd: f64,
    pub stoi: f64,
    pub vuv_f1: f64,
    pub mfcc_fid: f64,
    pub n_pairs: usize,
}

impl MetricReport {
    fn values(&self) -> [f64; 6] {
        [
            self.f0_rmse,
            self.las_rmse,
            self.mcd,
            self.stoi,
            self.vuv_f1,
            self.mfcc_fid,
        ]
    }

    /// Two-row tab-separated table: header and values.
    pub fn to_table(&self) -> String {
        let mut header: Vec<&str> = METRIC_KEYS.to_vec();
        header.push("n_pairs");
        let mut row: Vec<String> = self.values().iter().map(|v| format!("{v:.6}")).collect();
        row.push(self.n_pairs.to_string());
        format!("{}\n{}\n", header.join("\t"), row.join("\t"))
    }

    /// One `key=value` line per metric.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (key, value) in METRIC_KEYS.iter().zip(self.values()) {
            out.push_str(&format!("{key}={value:.6}\n"));
        }
        out.push_str(&format!("n_pairs={}\n", self.n_pairs));
        out
    }
}

/// Evaluates synthesized counterparts of `ref_paths` found in `syn_dir` by
/// file name. Pair metrics are averaged; the Fréchet term compares the two
/// pooled sets.
pub fn evaluate_testset(ref_paths: &[PathBuf], syn_dir: &Path) -> Result<MetricReport, MetricError> {
    if ref_paths.is_empty() {
        return Err(MetricError::EmptyTestset);
    }
    let mut refs = Vec::with_capacity(ref_paths.len());
    let mut syns = Vec::with_capacity(ref_paths.len());
    for path in ref_paths {
        let name = path
            .file_name()
            .ok_or_else(|| MetricError::MissingCounterpart(path.display().to_string()))?;
        let counterpart = syn_dir.join(name);
        if !counterpart.is_file() {
            return Err(MetricError::MissingCounterpart(
                name.to_string_lossy().into_owned(),
            ));
        }
        refs.push(read_wav(path)?);
        syns.push(read_wav(&counterpart)?);
    }

    let mut sums = [0.0f64; 5];
    for (r, s) in refs.iter().zip(&syns) {
        let rt = extract_f0(r)?;
        let st = extract_f0(s)?;
        sums[0] += f0_rmse(&rt, &st)?;
        sums[1] += las_rmse(r, s)?;
        sums[2] += mcd(r, s)?;
        sums[3] += stoi(r, s)?;
        sums[4] += vuv_f1(&rt, &st);
    }
    let n = refs.len() as f64;
    Ok(MetricReport {
        f0_rmse: sums[0] / n,
        las_rmse: sums[1] / n,
        mcd: sums[2] / n,
        stoi: sums[3] / n,
        vuv_f1: sums[4] / n,
        mfcc_fid: mfcc_fid(&refs, &syns)?,
        n_pairs: refs.len(),
    })
}
