use std::fmt;

use serde::{Deserialize, Serialize};

use super::TermId;

/// Base IRI of stream identifiers: stream `k` is named `<{STREAM_IRI_BASE}k>`.
pub const STREAM_IRI_BASE: &str = "http://example.org/stream/";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub s: TermId,
    pub p: TermId,
    pub o: TermId,
}

impl Triple {
    pub fn new(s: TermId, p: TermId, o: TermId) -> Self {
        Self { s, p, o }
    }
}

/// Identifier of an input stream.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub struct StreamId(pub u32);

impl StreamId {
    pub fn iri(self) -> String {
        format!("{STREAM_IRI_BASE}{}", self.0)
    }

    /// Inverse of [`StreamId::iri`]; any other IRI is not a stream.
    pub fn from_iri(iri: &str) -> Option<Self> {
        iri.strip_prefix(STREAM_IRI_BASE)?
            .parse()
            .ok()
            .map(StreamId)
    }
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A triple stamped with its arrival time (ms) on one stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimestampedTriple {
    pub triple: Triple,
    pub t: u64,
    pub stream: StreamId,
}

impl TimestampedTriple {
    pub fn new(triple: Triple, t: u64, stream: StreamId) -> Self {
        Self { triple, t, stream }
    }
}
