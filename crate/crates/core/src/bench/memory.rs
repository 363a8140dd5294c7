use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::mcr::MemoryTrace;

pub const DEFAULT_SAMPLE_INTERVAL_MS: u64 = 100;

/// Samples a byte counter from a background thread at a fixed wall-clock
/// interval. The probe only reads; it must not block the engine for long.
pub struct MemorySampler {
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<MemoryTrace>>,
}

impl MemorySampler {
    pub fn start<F>(interval: Duration, probe: F) -> Self
    where
        F: Fn() -> usize + Send + 'static,
    {
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let handle = std::thread::spawn(move || {
            let origin = Instant::now();
            let mut trace = MemoryTrace::new();
            let mut k = 0u32;
            loop {
                let bytes = probe() as u64;
                // Sample times are the schedule, which strictly increases.
                let _ = trace.push(interval.as_secs_f64() * 1000.0 * f64::from(k), bytes);
                if flag.load(Ordering::Acquire) {
                    break;
                }
                k += 1;
                let due = origin + interval * k;
                let now = Instant::now();
                if due > now {
                    std::thread::sleep(due - now);
                }
            }
            trace
        });
        Self {
            stop,
            handle: Some(handle),
        }
    }

    /// Takes one last sample and returns the trace.
    pub fn stop(mut self) -> MemoryTrace {
        self.stop.store(true, Ordering::Release);
        self.handle
            .take()
            .expect("sampler joined once")
            .join()
            .expect("sampler thread panicked")
    }
}

impl Drop for MemorySampler {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Release);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// Records a trace in stream time. Before applying an arrival stamped `t`,
/// call [`VirtualSampler::advance`]: every sampling instant before `t` sees
/// the state left by the earlier arrivals.
#[derive(Debug)]
pub struct VirtualSampler {
    interval_ms: u64,
    next: Option<u64>,
    trace: MemoryTrace,
}

impl VirtualSampler {
    pub fn new(interval_ms: u64) -> Self {
        assert!(interval_ms > 0, "sampling interval must be positive");
        Self {
            interval_ms,
            next: None,
            trace: MemoryTrace::new(),
        }
    }

    /// Samples `bytes()` at each sampling instant in `[next, t)`. Nothing
    /// changes between arrivals, so one reading serves all of them. The
    /// first call fixes the sampling grid at `t`.
    pub fn advance(&mut self, t: u64, bytes: impl FnOnce() -> usize) {
        let next = *self.next.get_or_insert(t);
        if t <= next {
            return;
        }
        let b = bytes() as u64;
        let mut at = next;
        while at < t {
            let _ = self.trace.push(at as f64, b);
            at += self.interval_ms;
        }
        self.next = Some(at);
    }

    /// Samples the final state at every remaining instant up to `t`.
    pub fn finish(mut self, t: u64, bytes: impl FnOnce() -> usize) -> MemoryTrace {
        self.advance(t + 1, bytes);
        self.trace
    }
}
