//! Thread-local allocation metering for the benchmark runner.
//!
//! Register [`CountingAllocator`] as the global allocator in a binary to
//! get per-thread transient-allocation peaks:
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: pmaf::memtrack::CountingAllocator = pmaf::memtrack::CountingAllocator;
//! ```
//!
//! Without registration the counters stay at zero and peak measurements
//! report 0 bytes.

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;

thread_local! {
    static CURRENT: Cell<isize> = const { Cell::new(0) };
    static PEAK: Cell<isize> = const { Cell::new(0) };
}

/// Pass-through allocator that tracks live bytes per thread.
pub struct CountingAllocator;

unsafe impl GlobalAlloc for CountingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            record(layout.size() as isize);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        record(-(layout.size() as isize));
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc_zeroed(layout);
        if !p.is_null() {
            record(layout.size() as isize);
        }
        p
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = System.realloc(ptr, layout, new_size);
        if !p.is_null() {
            record(new_size as isize - layout.size() as isize);
        }
        p
    }
}

fn record(delta: isize) {
    CURRENT.with(|c| {
        let now = c.get() + delta;
        c.set(now);
        PEAK.with(|p| {
            if now > p.get() {
                p.set(now);
            }
        });
    });
}

/// Marks the start of a measured section on this thread.
pub struct SectionStart(isize);

/// Begins a measurement: the peak is reset to the current live count.
pub fn section_start() -> SectionStart {
    let now = CURRENT.with(Cell::get);
    PEAK.with(|p| p.set(now));
    SectionStart(now)
}

/// Peak transient bytes allocated on this thread since `start`.
pub fn section_peak(start: &SectionStart) -> u64 {
    let peak = PEAK.with(Cell::get);
    (peak - start.0).max(0) as u64
}
