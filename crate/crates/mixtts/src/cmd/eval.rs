//! `eval`: score synthesized audio against reference audio and write the
//! metric report files.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

use anyhow::{bail, Context, Result};
use metrics::evaluate_testset;
use text_frontend::{load_manifest, Registry};

use crate::config::RunConfig;
use crate::record::{log_kv, RunRecord};

/// Runs the external scorer on one pair and parses the last float on stdout.
fn pesq_score(bin: &std::path::Path, reference: &std::path::Path, synth: &std::path::Path) -> Result<f64> {
    let output = Command::new(bin)
        .arg(reference)
        .arg(synth)
        .output()
        .with_context(|| format!("running {}", bin.display()))?;
    if !output.status.success() {
        bail!("{} exited with {}", bin.display(), output.status);
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    stdout
        .split_whitespace()
        .rev()
        .find_map(|tok| tok.parse::<f64>().ok())
        .with_context(|| format!("no numeric score in output of {}", bin.display()))
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let (Some(manifest_path), Some(registry_path), Some(syn_dir)) =
        (&cfg.manifest, &cfg.registry, &cfg.syn_dir)
    else {
        bail!("eval needs --manifest, --registry, and --syn-dir");
    };

    let registry = Registry::load(registry_path)
        .with_context(|| format!("loading registry {}", registry_path.display()))?;
    let records = load_manifest(manifest_path, &registry, |p| {
        mel_dsp::wav_duration_s(p).map_err(|e| e.to_string())
    })
    .with_context(|| format!("loading manifest {}", manifest_path.display()))?;

    let mut ref_paths: Vec<PathBuf> = Vec::new();
    for rec in &records {
        let p = PathBuf::from(&rec.audio_path);
        if !ref_paths.contains(&p) {
            ref_paths.push(p);
        }
    }

    let report = evaluate_testset(&ref_paths, syn_dir)
        .with_context(|| format!("scoring {} against references", syn_dir.display()))?;

    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating {}", cfg.out.display()))?;
    let table_path = cfg.out.join("metrics.tsv");
    fs::write(&table_path, report.to_table())
        .with_context(|| format!("writing {}", table_path.display()))?;
    let kv_path = cfg.out.join("metrics.kv");
    fs::write(&kv_path, report.to_kv())
        .with_context(|| format!("writing {}", kv_path.display()))?;

    for line in report.to_kv().lines() {
        if let Some((k, v)) = line.split_once('=') {
            log_kv("metric", &[(k, v.to_string())]);
        }
    }

    let mut rec = RunRecord::new("eval");
    for (k, v) in cfg.echo() {
        rec.push(&format!("config.{k}"), v);
    }
    rec.push("n_pairs", report.n_pairs);

    if let Some(bin) = &cfg.pesq_bin {
        let mut scores = Vec::new();
        let mut failure = None;
        for reference in &ref_paths {
            let name = reference.file_name().unwrap_or_default();
            match pesq_score(bin, reference, &syn_dir.join(name)) {
                Ok(s) => scores.push(s),
                Err(e) => {
                    failure = Some(format!("{e:#}"));
                    break;
                }
            }
        }
        match failure {
            None => {
                let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                log_kv("metric", &[("pesq", format!("{mean:.6}"))]);
                rec.push("pesq", format!("{mean:.6}"));
            }
            Some(reason) => {
                log_kv("pesq_skipped", &[("reason", reason.clone())]);
                rec.push("pesq", "skipped");
            }
        }
    }

    rec.push_hash("metrics_table", &table_path)?;
    rec.push_hash("metrics_kv", &kv_path)?;
    rec.write(&cfg.out)
}
