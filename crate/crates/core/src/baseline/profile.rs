//! Wall-clock instrumentation for experiment runs.
//!
//! Timing is kept strictly out of band: estimates never depend on it, and
//! the command-line tools only emit it on request, so that default output
//! stays byte-for-byte reproducible.

use std::time::Instant;

/// Wall-clock measurement of one labeled unit of work.
#[derive(Clone, Debug, PartialEq)]
pub struct TimingRecord {
    pub label: String,
    pub wall_ms: f64,
    /// How many homogeneous items the work comprised (replicates, grid
    /// points); zero when not meaningful.
    pub items: usize,
}

impl TimingRecord {
    /// Milliseconds per item, or the total when items were not counted.
    pub fn per_item_ms(&self) -> f64 {
        if self.items > 0 {
            self.wall_ms / self.items as f64
        } else {
            self.wall_ms
        }
    }
}

/// Run `work`, returning its result alongside a timing record.
pub fn runtime_profile<T>(
    label: &str,
    items: usize,
    work: impl FnOnce() -> T,
) -> (T, TimingRecord) {
    let start = Instant::now();
    let out = work();
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    (
        out,
        TimingRecord {
            label: label.to_string(),
            wall_ms,
            items,
        },
    )
}
