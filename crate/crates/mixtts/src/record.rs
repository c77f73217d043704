//! Machine-parseable run logging and reproducibility records.
//!
//! Every log line is `key=value` pairs separated by single spaces, so runs
//! can be checked by grepping. Each command also writes a `<command>.record`
//! file next to its outputs holding the fully-resolved configuration, the
//! seed, and content hashes of the artifacts it produced.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// One `event=... k=v ...` line on stdout.
pub fn log_kv(event: &str, pairs: &[(&str, String)]) {
    let mut line = format!("event={event}");
    for (k, v) in pairs {
        let _ = write!(line, " {k}={v}");
    }
    println!("{line}");
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes =
        fs::read(path).with_context(|| format!("hashing {} for the run record", path.display()))?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(format!("{:x}", h.finalize()))
}

/// Accumulates the lines of one run's reproducibility record.
pub struct RunRecord {
    command: String,
    lines: Vec<String>,
}

impl RunRecord {
    pub fn new(command: &str) -> Self {
        RunRecord {
            command: command.to_string(),
            lines: vec![format!("command={command}")],
        }
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}={value}"));
    }

    /// Adds `<key>.sha256=<hash>` for an artifact the run produced.
    pub fn push_hash(&mut self, key: &str, path: &Path) -> Result<()> {
        let hash = sha256_file(path)?;
        self.lines.push(format!("{key}.sha256={hash}"));
        Ok(())
    }

    /// Writes `<dir>/<command>.record` and echoes its location to the log.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(format!("{}.record", self.command));
        let mut text = self.lines.join("\n");
        text.push('\n');
        fs::write(&path, text)
            .with_context(|| format!("writing run record {}", path.display()))?;
        log_kv("record", &[("path", path.display().to_string())]);
        Ok(())
    }
}
