//! Byte-exact heap accounting via a wrapper around the system allocator.
//!
//! `CountingAlloc` forwards every call to [`std::alloc::System`] and keeps two
//! process-wide counters: the bytes currently live and the high-water mark.
//! Binaries that want memory numbers install it with `#[global_allocator]`;
//! the measurement functions refuse to run when it is absent, because the
//! counters would silently stay at zero.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

/// Global allocator that counts live bytes and tracks their peak.
pub struct CountingAlloc;

impl CountingAlloc {
    pub const fn new() -> Self {
        CountingAlloc
    }
}

impl Default for CountingAlloc {
    fn default() -> Self {
        Self::new()
    }
}

fn add(n: usize) {
    let live = LIVE.fetch_add(n, Ordering::SeqCst) + n;
    PEAK.fetch_max(live, Ordering::SeqCst);
}

fn sub(n: usize) {
    LIVE.fetch_sub(n, Ordering::SeqCst);
}

unsafe impl GlobalAlloc for CountingAlloc {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc(layout);
        if !ptr.is_null() {
            add(layout.size());
        }
        ptr
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc_zeroed(layout);
        if !ptr.is_null() {
            add(layout.size());
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        sub(layout.size());
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let new_ptr = System.realloc(ptr, layout, new_size);
        if !new_ptr.is_null() {
            sub(layout.size());
            add(new_size);
        }
        new_ptr
    }
}

/// Bytes currently allocated and not yet freed.
pub fn live_bytes() -> usize {
    LIVE.load(Ordering::SeqCst)
}

/// Collapse the high-water mark down to the current live count.
pub fn reset_peak() {
    PEAK.store(LIVE.load(Ordering::SeqCst), Ordering::SeqCst);
}

/// High-water mark of live bytes since the last [`reset_peak`].
pub fn peak_bytes() -> usize {
    PEAK.load(Ordering::SeqCst)
}

/// Runs `f` and reports how far the heap grew above its starting point while
/// `f` executed. The baseline is the live count on entry, so allocations that
/// outlive the call and scratch that is freed again both count toward the
/// peak, while memory allocated beforehand does not.
pub fn transient_peak<T>(f: impl FnOnce() -> T) -> (T, usize) {
    let before = live_bytes();
    reset_peak();
    let out = f();
    let peak = peak_bytes().saturating_sub(before);
    (out, peak)
}

/// True when `CountingAlloc` really is the process allocator: a probe
/// allocation must show up in the live counter.
pub fn allocator_active() -> bool {
    const PROBE: usize = 16 * 1024;
    let before = live_bytes();
    let probe = vec![1u8; PROBE];
    std::hint::black_box(&probe);
    let during = live_bytes();
    drop(probe);
    during >= before + PROBE
}
