//! `bench`: throughput, real-time factor, peak memory, and runtime-scaling
//! exponents for the selected mixer.

use std::fs;

use acoustic_model::{load_checkpoint, MelStats, Model, ModelConfig};
use anyhow::{Context, Result};
use bench::{
    measure_peak_memory, measure_rtf, measure_throughput, report_kv, report_table, scaling_report,
    BenchReport, SynthSpec,
};
use nnet::Prng;

use crate::config::RunConfig;
use crate::record::{log_kv, RunRecord};

/// Sequence lengths for the scaling fit: a short ladder at desk scale, the
/// full one otherwise.
fn ladder(desk: bool) -> Vec<usize> {
    if desk {
        vec![64, 128, 256, 512]
    } else {
        vec![256, 512, 1024, 2048, 4096]
    }
}

const SCALING_WIDTH: usize = 64;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let (mut model, stats, mcfg): (Model, MelStats, ModelConfig) = match &cfg.checkpoint {
        Some(path) => {
            let loaded = load_checkpoint(path)
                .with_context(|| format!("loading checkpoint {}", path.display()))?;
            let stats = MelStats {
                mean: loaded.meta.mel_mean.clone(),
                std: loaded.meta.mel_std.clone(),
            };
            (loaded.model, stats, loaded.meta.config)
        }
        None => {
            let mcfg = if cfg.desk_scale {
                ModelConfig::desk(cfg.mixer, 32, 4, 2)
            } else {
                ModelConfig::full(cfg.mixer, 32, 4, 2)
            };
            let model =
                Model::new(mcfg.clone(), &mut Prng::seed(cfg.seed)).context("building model")?;
            let stats = MelStats {
                mean: vec![0.0; mcfg.dec_out],
                std: vec![1.0; mcfg.dec_out],
            };
            (model, stats, mcfg)
        }
    };

    let tokens: Vec<usize> = (0..64).map(|i| 1 + i % (mcfg.vocab_size - 1)).collect();
    let spec = SynthSpec {
        tokens: &tokens,
        speaker: 0,
        language: 0,
        n_steps: cfg.n_steps,
        frame_hop_s: 256.0 / 22_050.0,
        seed: cfg.seed,
    };

    let throughput = measure_throughput(&model, &stats, &spec, cfg.bench_batch, cfg.bench_n_batches)
        .context("measuring throughput")?;
    let rtf = measure_rtf(&model, &stats, &spec).context("measuring real-time factor")?;
    let peak_bytes = measure_peak_memory(&mut model, &stats, &spec, cfg.bench_batch)
        .context("measuring peak memory")?;

    let lens = ladder(cfg.desk_scale);
    let scaling = scaling_report::<f32>(&[cfg.mixer], &lens, SCALING_WIDTH)
        .context("fitting runtime scaling")?;
    let row = &scaling[0];

    let report = BenchReport {
        mixer: cfg.mixer,
        batch: cfg.bench_batch,
        seq_len: *lens.last().expect("ladder is never empty"),
        throughput_ups: throughput.utterances_per_s,
        audio_seconds_per_s: throughput.audio_seconds_per_s,
        rtf,
        peak_bytes,
        slope: row.slope,
        r2: row.r2,
        threads: 1,
        dtype: "float64",
    };

    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating {}", cfg.out.display()))?;
    let table_path = cfg.out.join("bench.tsv");
    fs::write(&table_path, report_table(std::slice::from_ref(&report)))
        .with_context(|| format!("writing {}", table_path.display()))?;
    let kv_path = cfg.out.join("bench.kv");
    fs::write(&kv_path, report_kv(std::slice::from_ref(&report)))
        .with_context(|| format!("writing {}", kv_path.display()))?;

    log_kv(
        "bench",
        &[
            ("mixer", cfg.mixer.name().to_string()),
            ("throughput_ups", format!("{:.6}", report.throughput_ups)),
            (
                "audio_seconds_per_s",
                format!("{:.6}", report.audio_seconds_per_s),
            ),
            ("rtf", format!("{rtf:.6}")),
            ("peak_bytes", peak_bytes.to_string()),
            ("slope", format!("{:.6}", row.slope)),
            ("r2", format!("{:.6}", row.r2)),
            ("reliable", row.reliable.to_string()),
            ("scaling_dtype", "float32".to_string()),
        ],
    );

    let mut rec = RunRecord::new("bench");
    for (k, v) in cfg.echo() {
        rec.push(&format!("config.{k}"), v);
    }
    // End-to-end numbers come from the float64 model; the per-layer scaling
    // fit times the float32 kernels, the path a production build would use.
    rec.push("model_dtype", "float64");
    rec.push("scaling_dtype", "float32");
    rec.push("scaling_reliable", row.reliable);
    rec.push_hash("bench_table", &table_path)?;
    rec.push_hash("bench_kv", &kv_path)?;
    rec.write(&cfg.out)
}
