//! Wall-clock accumulators shared between threads.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

/// Cumulative duration that can be added to through a shared reference.
#[derive(Debug, Default)]
pub struct TimeAccumulator {
    nanos: AtomicU64,
}

impl TimeAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_duration(d: Duration) -> Self {
        let acc = Self::new();
        acc.add(d);
        acc
    }

    pub fn add(&self, d: Duration) {
        let n = u64::try_from(d.as_nanos()).unwrap_or(u64::MAX);
        self.nanos.fetch_add(n, Ordering::Relaxed);
    }

    /// Runs `f`, charging its wall time to this accumulator.
    pub fn time<T>(&self, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.add(start.elapsed());
        out
    }

    pub fn seconds(&self) -> f64 {
        self.nanos.load(Ordering::Relaxed) as f64 * 1e-9
    }

    pub fn reset(&self) {
        self.nanos.store(0, Ordering::Relaxed);
    }
}

impl Clone for TimeAccumulator {
    fn clone(&self) -> Self {
        Self { nanos: AtomicU64::new(self.nanos.load(Ordering::Relaxed)) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulates_across_threads() {
        let acc = TimeAccumulator::new();
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| acc.add(Duration::from_millis(5)));
            }
        });
        assert!((acc.seconds() - 0.020).abs() < 1e-12);
        acc.reset();
        assert_eq!(acc.seconds(), 0.0);
    }
}
