//! Argument parsing and configuration resolution.
//!
//! Values resolve with a fixed precedence: command-line flags override the
//! TOML config file, which overrides built-in defaults. Unknown config keys
//! are rejected by name, and the fully-resolved configuration is echoed to
//! the log and into the run record, seed included, so every run is
//! reconstructible from its artifacts.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use seqmix::MixerKind;
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "mixtts", version, about = "Multilingual flow-matching speech synthesizer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Subcommand, Debug)]
pub enum CommandArgs {
    /// Build training artifacts: vocabulary, mel cache, oversampled manifest.
    Prepare(PrepareArgs),
    /// Fit the acoustic model and write a checkpoint series.
    Train(TrainArgs),
    /// Synthesize a WAV and mel per input text line from a checkpoint.
    Synth(SynthArgs),
    /// Score synthesized audio against reference audio.
    Eval(EvalArgs),
    /// Measure throughput, real-time factor, memory, and runtime scaling.
    Bench(BenchArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML config file; flags given on the command line override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw in the run.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory the run writes into.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Model checkpoint to load.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Sequence mixer: attention, mamba2, hydra, or fnet.
    #[arg(long)]
    pub mixer: Option<String>,
    /// Use the small model that trains on a desk CPU.
    #[arg(long)]
    pub desk_scale: bool,
}

#[derive(Args, Debug, Default)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Corpus manifest: one `audio<TAB>speaker<TAB>language<TAB>text` line
    /// per utterance.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Speaker/language registry TOML.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Generate the bundled deterministic tone corpus first and prepare that.
    #[arg(long)]
    pub synthetic: bool,
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory written by `prepare`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub sigma_min: Option<f64>,
    /// Keep an intermediate checkpoint every this many epochs.
    #[arg(long)]
    pub save_every: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Text file; each line becomes one utterance.
    #[arg(long)]
    pub text: Option<PathBuf>,
    /// Speaker name from the registry (default: lowest id).
    #[arg(long)]
    pub speaker: Option<String>,
    /// Language name from the registry (default: lowest id).
    #[arg(long)]
    pub language: Option<String>,
    /// Flow integration steps.
    #[arg(long)]
    pub n_steps: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Manifest listing the reference audio.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Speaker/language registry TOML for the manifest.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Directory of synthesized audio with matching file names.
    #[arg(long)]
    pub syn_dir: Option<PathBuf>,
    /// External PESQ scorer invoked as `<bin> <ref.wav> <syn.wav>`.
    #[arg(long)]
    pub pesq_bin: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Utterances per timed batch.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Timed batches per throughput median.
    #[arg(long)]
    pub n_batches: Option<usize>,
}

/// Config-file counterpart of the flags. Every key is optional; unknown keys
/// fail parsing with the offending name.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub mixer: Option<String>,
    pub desk_scale: Option<bool>,
    pub manifest: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub synthetic: Option<bool>,
    pub data: Option<PathBuf>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub sigma_min: Option<f64>,
    pub save_every: Option<usize>,
    pub text: Option<PathBuf>,
    pub speaker: Option<String>,
    pub language: Option<String>,
    pub n_steps: Option<usize>,
    pub syn_dir: Option<PathBuf>,
    pub pesq_bin: Option<PathBuf>,
    pub batch: Option<usize>,
    pub n_batches: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }
}

/// Everything a command needs, fully resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub mixer: MixerKind,
    pub seed: u64,
    pub out: PathBuf,
    pub desk_scale: bool,
    pub checkpoint: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub synthetic: bool,
    pub data: Option<PathBuf>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub sigma_min: f64,
    pub save_every: usize,
    pub text: Option<PathBuf>,
    pub speaker: Option<String>,
    pub language: Option<String>,
    pub n_steps: usize,
    pub syn_dir: Option<PathBuf>,
    pub pesq_bin: Option<PathBuf>,
    pub bench_batch: usize,
    pub bench_n_batches: usize,
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn pick_opt<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

impl RunConfig {
    pub fn resolve(args: &CommandArgs) -> Result<Self> {
        let (command, common) = match args {
            CommandArgs::Prepare(a) => ("prepare", &a.common),
            CommandArgs::Train(a) => ("train", &a.common),
            CommandArgs::Synth(a) => ("synth", &a.common),
            CommandArgs::Eval(a) => ("eval", &a.common),
            CommandArgs::Bench(a) => ("bench", &a.common),
        };
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let mixer_name = pick(common.mixer.clone(), file.mixer.clone(), "hydra".into());
        let mixer = MixerKind::from_str(&mixer_name)
            .map_err(|e| anyhow::anyhow!("--mixer {mixer_name}: {e}"))?;

        let mut cfg = RunConfig {
            command,
            mixer,
            seed: pick(common.seed, file.seed, 0),
            out: pick(common.out.clone(), file.out.clone(), PathBuf::from("out")),
            desk_scale: common.desk_scale || file.desk_scale.unwrap_or(false),
            checkpoint: pick_opt(common.checkpoint.clone(), file.checkpoint.clone()),
            manifest: None,
            registry: None,
            synthetic: false,
            data: None,
            epochs: file.epochs.unwrap_or(200),
            batch_size: file.batch_size.unwrap_or(8),
            learning_rate: file.learning_rate.unwrap_or(1e-3),
            sigma_min: file.sigma_min.unwrap_or(1e-4),
            save_every: file.save_every.unwrap_or(50),
            text: None,
            speaker: file.speaker.clone(),
            language: file.language.clone(),
            n_steps: file.n_steps.unwrap_or(10),
            syn_dir: None,
            pesq_bin: None,
            bench_batch: file.batch.unwrap_or(2),
            bench_n_batches: file.n_batches.unwrap_or(3),
        };

        match args {
            CommandArgs::Prepare(a) => {
                cfg.manifest = pick_opt(a.manifest.clone(), file.manifest);
                cfg.registry = pick_opt(a.registry.clone(), file.registry);
                cfg.synthetic = a.synthetic || file.synthetic.unwrap_or(false);
            }
            CommandArgs::Train(a) => {
                cfg.data = pick_opt(a.data.clone(), file.data);
                cfg.epochs = pick(a.epochs, file.epochs, 200);
                cfg.batch_size = pick(a.batch_size, file.batch_size, 8);
                cfg.learning_rate = pick(a.learning_rate, file.learning_rate, 1e-3);
                cfg.sigma_min = pick(a.sigma_min, file.sigma_min, 1e-4);
                cfg.save_every = pick(a.save_every, file.save_every, 50);
            }
            CommandArgs::Synth(a) => {
                cfg.text = pick_opt(a.text.clone(), file.text);
                cfg.speaker = pick_opt(a.speaker.clone(), file.speaker);
                cfg.language = pick_opt(a.language.clone(), file.language);
                cfg.n_steps = pick(a.n_steps, file.n_steps, 10);
            }
            CommandArgs::Eval(a) => {
                cfg.manifest = pick_opt(a.manifest.clone(), file.manifest);
                cfg.registry = pick_opt(a.registry.clone(), file.registry);
                cfg.syn_dir = pick_opt(a.syn_dir.clone(), file.syn_dir);
                cfg.pesq_bin = pick_opt(a.pesq_bin.clone(), file.pesq_bin);
            }
            CommandArgs::Bench(a) => {
                cfg.bench_batch = pick(a.batch, file.batch, 2);
                cfg.bench_n_batches = pick(a.n_batches, file.n_batches, 3);
            }
        }
        cfg.validate_paths()?;
        Ok(cfg)
    }

    /// Input paths must exist before any work starts.
    fn validate_paths(&self) -> Result<()> {
        let required: &[(&str, &Option<PathBuf>)] = &[
            ("checkpoint", &self.checkpoint),
            ("manifest", &self.manifest),
            ("registry", &self.registry),
            ("data", &self.data),
            ("text", &self.text),
            ("syn-dir", &self.syn_dir),
        ];
        for (name, path) in required {
            if let Some(p) = path {
                if !p.exists() {
                    bail!("--{name} path does not exist: {}", p.display());
                }
            }
        }
        Ok(())
    }

    /// Key-value view of every resolved field, for the log and the record.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        fn opt(p: &Option<PathBuf>) -> String {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into())
        }
        vec![
            ("command", self.command.to_string()),
            ("mixer", self.mixer.name().to_string()),
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("desk_scale", self.desk_scale.to_string()),
            ("checkpoint", opt(&self.checkpoint)),
            ("manifest", opt(&self.manifest)),
            ("registry", opt(&self.registry)),
            ("synthetic", self.synthetic.to_string()),
            ("data", opt(&self.data)),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("sigma_min", self.sigma_min.to_string()),
            ("save_every", self.save_every.to_string()),
            ("text", opt(&self.text)),
            ("speaker", self.speaker.clone().unwrap_or_else(|| "-".into())),
            (
                "language",
                self.language.clone().unwrap_or_else(|| "-".into()),
            ),
            ("n_steps", self.n_steps.to_string()),
            ("syn_dir", opt(&self.syn_dir)),
            ("pesq_bin", opt(&self.pesq_bin)),
            ("bench_batch", self.bench_batch.to_string()),
            ("bench_n_batches", self.bench_n_batches.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_config(dir: &Path, text: &str) -> PathBuf {
        let path = dir.join("run.toml");
        fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = write_config(dir.path(), "epochs = 200\nseed = 9\n");
        let args = CommandArgs::Train(TrainArgs {
            common: CommonArgs {
                config: Some(cfg_path),
                ..CommonArgs::default()
            },
            epochs: Some(2),
            ..TrainArgs::default()
        });
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.epochs, 2, "flag beats file");
        assert_eq!(cfg.seed, 9, "file beats default");
    }

    #[test]
    fn unknown_config_key_is_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = write_config(dir.path(), "epohcs = 2\n");
        let args = CommandArgs::Train(TrainArgs {
            common: CommonArgs {
                config: Some(cfg_path),
                ..CommonArgs::default()
            },
            ..TrainArgs::default()
        });
        let err = format!("{:#}", RunConfig::resolve(&args).unwrap_err());
        assert!(err.contains("epohcs"), "error should name the key: {err}");
    }

    #[test]
    fn defaults_fill_in_when_nothing_is_given() {
        let args = CommandArgs::Synth(SynthArgs::default());
        let err = RunConfig::resolve(&args);
        // No paths referenced, so resolution itself succeeds.
        let cfg = err.unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.n_steps, 10);
        assert_eq!(cfg.mixer, MixerKind::Hydra);
        let echoed = cfg.echo();
        assert!(echoed.iter().any(|(k, v)| *k == "seed" && v == "0"));
    }

    #[test]
    fn missing_input_path_fails_before_any_work() {
        let args = CommandArgs::Train(TrainArgs {
            data: Some(PathBuf::from("/nonexistent/prepared")),
            ..TrainArgs::default()
        });
        let err = format!("{:#}", RunConfig::resolve(&args).unwrap_err());
        assert!(err.contains("/nonexistent/prepared"), "{err}");
    }

    #[test]
    fn bad_mixer_name_is_reported() {
        let args = CommandArgs::Bench(BenchArgs {
            common: CommonArgs {
                mixer: Some("perceptron".into()),
                ..CommonArgs::default()
            },
            ..BenchArgs::default()
        });
        let err = format!("{:#}", RunConfig::resolve(&args).unwrap_err());
        assert!(err.contains("perceptron"), "{err}");
    }

    #[test]
    fn type_mismatch_in_config_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = write_config(dir.path(), "epochs = \"many\"\n");
        let args = CommandArgs::Train(TrainArgs {
            common: CommonArgs {
                config: Some(cfg_path),
                ..CommonArgs::default()
            },
            ..TrainArgs::default()
        });
        assert!(RunConfig::resolve(&args).is_err());
    }
}
