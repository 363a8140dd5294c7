use std::collections::VecDeque;

use crate::query::WindowRange;
use crate::rdf::{StreamId, TimestampedTriple};

use super::AlgebraError;

/// Arrival-ordered buffer of one stream under one time-based window.
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    stream: StreamId,
    range: WindowRange,
    elements: VecDeque<TimestampedTriple>,
    last_t: Option<u64>,
}

impl WindowBuffer {
    pub fn new(stream: StreamId, range: WindowRange) -> Self {
        Self {
            stream,
            range,
            elements: VecDeque::new(),
            last_t: None,
        }
    }

    pub fn stream(&self) -> StreamId {
        self.stream
    }

    pub fn range(&self) -> WindowRange {
        self.range
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn last_t(&self) -> Option<u64> {
        self.last_t
    }

    /// Appends without evicting.
    pub fn insert(&mut self, tt: TimestampedTriple) -> Result<(), AlgebraError> {
        if tt.stream != self.stream {
            return Err(AlgebraError::WrongStream {
                expected: self.stream,
                got: tt.stream,
            });
        }
        if let Some(last) = self.last_t {
            if tt.t < last {
                return Err(AlgebraError::OutOfOrder {
                    stream: self.stream,
                    t: tt.t,
                    last,
                });
            }
        }
        self.last_t = Some(tt.t);
        self.elements.push_back(tt);
        Ok(())
    }

    /// Drops elements that have slid out at `now`.
    pub fn evict(&mut self, now: u64) {
        while let Some(front) = self.elements.front() {
            if self.range.is_live(front.t, now) {
                break;
            }
            self.elements.pop_front();
        }
    }

    /// Elements with `now - range < t <= now`. Older elements are evicted on
    /// the way; elements newer than `now` stay buffered.
    pub fn snapshot(&mut self, now: u64) -> &[TimestampedTriple] {
        self.evict(now);
        let elems = self.elements.make_contiguous();
        let end = elems.partition_point(|e| e.t <= now);
        &elems[..end]
    }

    /// Evicts at `now` and lays the buffer out contiguously so several
    /// buffers can be viewed at once.
    pub fn prepare(&mut self, now: u64) {
        self.evict(now);
        self.elements.make_contiguous();
    }

    /// Elements with `now - range < t <= now` for a range no larger than the
    /// buffer's own. Call `prepare` first.
    pub fn view(&self, now: u64, range: WindowRange) -> &[TimestampedTriple] {
        let (elems, rest) = self.elements.as_slices();
        assert!(rest.is_empty(), "view requires a prepared buffer");
        let end = elems.partition_point(|e| e.t <= now);
        let start = elems[..end].partition_point(|e| !range.is_live(e.t, now));
        &elems[start..end]
    }

    /// Everything currently buffered, including elements past the last snapshot.
    pub fn iter(&self) -> impl Iterator<Item = &TimestampedTriple> {
        self.elements.iter()
    }

    /// Bytes of the elements currently held.
    pub fn approx_bytes(&self) -> usize {
        self.elements.len() * std::mem::size_of::<TimestampedTriple>()
    }
}
