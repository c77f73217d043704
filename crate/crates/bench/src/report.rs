//! Flat result rows and their two text renderings.

use seqmix::MixerKind;

/// Stable column set every rendering carries, so downstream tooling can key
/// on names instead of positions.
pub const SCHEMA_KEYS: [&str; 8] = [
    "mixer",
    "batch",
    "seq_len",
    "throughput_ups",
    "rtf",
    "peak_bytes",
    "slope",
    "r2",
];

/// One measured configuration, fully denormalized.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub mixer: MixerKind,
    pub batch: usize,
    pub seq_len: usize,
    /// Utterances synthesized per wall-clock second.
    pub throughput_ups: f64,
    /// Seconds of audio produced per wall-clock second.
    pub audio_seconds_per_s: f64,
    /// Wall seconds per audio second; < 1 is faster than real time.
    pub rtf: f64,
    /// Parameter bytes plus transient high-water mark.
    pub peak_bytes: usize,
    /// Fitted runtime exponent over sequence length.
    pub slope: f64,
    /// Goodness of the exponent fit.
    pub r2: f64,
    /// Worker threads during measurement; this harness always runs on one.
    pub threads: usize,
    /// Scalar type the measured kernels ran in.
    pub dtype: &'static str,
}

/// Tab-separated table: one header line, one line per row.
pub fn report_table(rows: &[BenchReport]) -> String {
    let mut out = String::from(
        "mixer\tbatch\tseq_len\tthroughput_ups\taudio_s_per_s\trtf\tpeak_bytes\tslope\tr2\tthreads\tdtype\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{:.6}\t{:.6}\t{}\t{}\n",
            r.mixer.name(),
            r.batch,
            r.seq_len,
            r.throughput_ups,
            r.audio_seconds_per_s,
            r.rtf,
            r.peak_bytes,
            r.slope,
            r.r2,
            r.threads,
            r.dtype,
        ));
    }
    out
}

/// `mixer.key=value` lines, one block per row, for grep-friendly logs.
pub fn report_kv(rows: &[BenchReport]) -> String {
    let mut out = String::new();
    for r in rows {
        let m = r.mixer.name();
        out.push_str(&format!("{m}.mixer={m}\n"));
        out.push_str(&format!("{m}.batch={}\n", r.batch));
        out.push_str(&format!("{m}.seq_len={}\n", r.seq_len));
        out.push_str(&format!("{m}.throughput_ups={:.6}\n", r.throughput_ups));
        out.push_str(&format!(
            "{m}.audio_seconds_per_s={:.6}\n",
            r.audio_seconds_per_s
        ));
        out.push_str(&format!("{m}.rtf={:.6}\n", r.rtf));
        out.push_str(&format!("{m}.peak_bytes={}\n", r.peak_bytes));
        out.push_str(&format!("{m}.slope={:.6}\n", r.slope));
        out.push_str(&format!("{m}.r2={:.6}\n", r.r2));
        out.push_str(&format!("{m}.threads={}\n", r.threads));
        out.push_str(&format!("{m}.dtype={}\n", r.dtype));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> BenchReport {
        BenchReport {
            mixer: MixerKind::Hydra,
            batch: 4,
            seq_len: 256,
            throughput_ups: 12.5,
            audio_seconds_per_s: 30.0,
            rtf: 0.04,
            peak_bytes: 1_048_576,
            slope: 1.02,
            r2: 0.998,
            threads: 1,
            dtype: "float32",
        }
    }

    #[test]
    fn table_has_header_and_one_line_per_row() {
        let rows = [sample_row(), sample_row()];
        let table = report_table(&rows);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        for key in SCHEMA_KEYS {
            assert!(lines[0].split('\t').any(|col| col == key), "missing {key}");
        }
        assert!(lines[1].starts_with("hydra\t4\t256\t12.500000"));
    }

    #[test]
    fn kv_lines_carry_every_schema_key() {
        let kv = report_kv(&[sample_row()]);
        for key in SCHEMA_KEYS {
            let want = format!("hydra.{key}=");
            assert!(kv.lines().any(|l| l.starts_with(&want)), "missing {want}");
        }
        assert!(kv.contains("hydra.rtf=0.040000\n"));
        assert!(kv.contains("hydra.peak_bytes=1048576\n"));
        assert!(kv.contains("hydra.dtype=float32\n"));
    }
}
