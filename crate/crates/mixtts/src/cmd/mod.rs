//! Subcommand implementations.

pub mod bench_run;
pub mod eval;
pub mod prepare;
pub mod synth;
pub mod train;
