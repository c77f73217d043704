use std::process::ExitCode;

use clap::Parser;

/// Memory measurements in `bench` need byte-exact heap accounting.
#[global_allocator]
static ALLOC: bench::CountingAlloc = bench::CountingAlloc::new();

fn main() -> ExitCode {
    let cli = mixtts::Cli::parse();
    match mixtts::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
