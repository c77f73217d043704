//! Efficiency harness for the synthesis stack: throughput, real-time factor,
//! peak heap, and runtime-scaling exponents per sequence mixer.
//!
//! Timing uses the monotonic clock with warm-up runs discarded and medians
//! reported. Memory uses [`CountingAlloc`], a byte-exact wrapper around the
//! system allocator that the measuring binary installs with
//! `#[global_allocator]`. Everything runs single-threaded, parameters are
//! never written, and identical configurations reproduce identical peak
//! byte counts.

mod alloc;
mod error;
mod measure;
mod report;
mod scaling;
mod timing;

pub use alloc::{
    allocator_active, live_bytes, peak_bytes, reset_peak, transient_peak, CountingAlloc,
};
pub use error::BenchError;
pub use measure::{
    measure_layer_peak, measure_peak_memory, measure_rtf, measure_throughput, param_checksum,
    rtf_value, SynthSpec, Throughput,
};
pub use report::{report_kv, report_table, BenchReport, SCHEMA_KEYS};
pub use scaling::{scaling_report, ScalingRow, MIN_SCALING_POINTS, RELIABLE_R2};
pub use timing::{log_log_fit, median_seconds, TIMED_RUNS, WARMUP_RUNS};

/// The unit-test binary measures its own heap, so it installs the counter.
#[cfg(test)]
#[global_allocator]
static TEST_ALLOC: CountingAlloc = CountingAlloc::new();

/// Allocator counters and wall-clock timings are process-global state, so
/// tests that touch either take this lock to keep other tests' allocations
/// and CPU load out of their measurements.
#[cfg(test)]
pub(crate) fn measurement_lock() -> std::sync::MutexGuard<'static, ()> {
    static GUARD: std::sync::Mutex<()> = std::sync::Mutex::new(());
    GUARD.lock().unwrap_or_else(|e| e.into_inner())
}
