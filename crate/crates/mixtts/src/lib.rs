//! Command-line front door for the synthesizer: `prepare`, `train`, `synth`,
//! `eval`, and `bench` subcommands over one shared configuration layer.
//!
//! Flags override the TOML config file, which overrides defaults; the
//! resolved configuration is echoed as a `key=value` log line and written
//! into each run's record file together with content hashes of the
//! artifacts, so any run can be reproduced from what it leaves on disk.

use std::fs;

use anyhow::{Context, Result};

pub mod cmd;
pub mod config;
pub mod corpus;
pub mod data;
pub mod record;

pub use config::{Cli, CommandArgs, RunConfig};
pub use corpus::{generate_corpus, CorpusPaths, CORPUS_LANGUAGES, CORPUS_SPEAKERS, CORPUS_UTTERANCES};
pub use record::{log_kv, sha256_file, RunRecord};

/// Resolves configuration, echoes it, and dispatches to the subcommand.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = RunConfig::resolve(&cli.command)?;
    let echoed = cfg.echo();
    let pairs: Vec<(&str, String)> = echoed.iter().map(|(k, v)| (*k, v.clone())).collect();
    record::log_kv("config", &pairs);
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;

    let result = match &cli.command {
        CommandArgs::Prepare(_) => cmd::prepare::run(&cfg),
        CommandArgs::Train(_) => cmd::train::run(&cfg),
        CommandArgs::Synth(_) => cmd::synth::run(&cfg),
        CommandArgs::Eval(_) => cmd::eval::run(&cfg),
        CommandArgs::Bench(_) => cmd::bench_run::run(&cfg),
    };
    result.with_context(|| format!("{} failed", cfg.command))
}
