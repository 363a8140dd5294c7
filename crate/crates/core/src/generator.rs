//! Seeded generator of the water-network workload: observation events on
//! one or more streams and the static sensor descriptions.
//!
//! Each event `i` produces, in this order:
//!
//! ```text
//! ex:message/i      ex:hasObservation  ex:observation/i
//! ex:observation/i  ex:observeFlow     ex:measurement/i   (or ex:observeChlorine)
//! ex:measurement/i  ex:hasTag          ex:tag/k           (one per tag)
//! ex:observation/i  ex:hasId           "0000000i"
//! ex:observation/i  ex:fromSensor      ex:sensor/(i mod n_sensors)
//! ```

use std::fmt::Write as _;
use std::sync::mpsc::{SyncSender, TrySendError};
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::rdf::{Dictionary, StreamId, Term, TimestampedTriple, Triple};

pub const EX: &str = "http://example.org/water/";

pub fn ex(local: &str) -> Term {
    Term::iri(format!("{EX}{local}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Partition {
    RoundRobin,
    Hash,
}

/// How timestamps are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Emission {
    /// Uniform grid at `r` triples per second, paced in real time when emitted.
    Rate(f64),
    /// Delivered as fast as the sink accepts; timestamps follow a virtual
    /// grid at the given rate.
    Batch { virtual_rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_sensors: u32,
    pub tags_per_observation: u32,
    /// Number of distinct tag IRIs tags are drawn from.
    pub tag_pool: u32,
    /// Flow observations between consecutive chlorine observations.
    pub flow_per_chlorine: u32,
    pub id_width: usize,
    pub emission: Emission,
    pub start_ms: u64,
    pub n_streams: u32,
    pub partition: Partition,
    /// Moves tag triples to stream 1, `d` ms after the rest of their event.
    pub async_split_ms: Option<u64>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_sensors: 10,
            tags_per_observation: 3,
            tag_pool: 20,
            flow_per_chlorine: 50,
            id_width: 8,
            emission: Emission::Rate(1000.0),
            start_ms: 0,
            n_streams: 1,
            partition: Partition::RoundRobin,
            async_split_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    Config(String),
    #[error("sink did not accept a triple within {0:?}")]
    Backpressure(Duration),
    #[error("sink disconnected")]
    Disconnected,
    #[error("sink rejected a triple: {0}")]
    Rejected(String),
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Config(m.to_string()));
        if self.n_sensors == 0 {
            return bad("n_sensors must be positive");
        }
        if self.tags_per_observation == 0 {
            return bad("tags_per_observation must be positive");
        }
        if self.tag_pool < self.tags_per_observation {
            return bad("tag_pool must hold at least tags_per_observation tags");
        }
        if self.n_streams == 0 {
            return bad("n_streams must be positive");
        }
        if self.async_split_ms.is_some() && self.n_streams != 2 {
            return bad("async split needs exactly two streams");
        }
        let rate = self.rate();
        if !(rate.is_finite() && rate > 0.0) {
            return bad("rate must be positive");
        }
        Ok(())
    }

    pub fn rate(&self) -> f64 {
        match self.emission {
            Emission::Rate(r) => r,
            Emission::Batch { virtual_rate } => virtual_rate,
        }
    }

    pub fn triples_per_event(&self) -> usize {
        4 + self.tags_per_observation as usize
    }

    pub fn is_chlorine(&self, i: u64) -> bool {
        let cycle = u64::from(self.flow_per_chlorine) + 1;
        i % cycle == cycle - 1
    }

    pub fn format_id(&self, i: u64) -> String {
        format!("{i:0width$}", width = self.id_width)
    }

    /// Timestamp of the `j`-th triple on the global grid.
    pub fn grid_time(&self, j: u64) -> u64 {
        self.start_ms + (j as f64 * 1000.0 / self.rate()).floor() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationKind {
    Flow,
    Chlorine,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub index: u64,
    pub kind: ObservationKind,
    pub sensor: u32,
    pub tags: Vec<u32>,
    pub triples: Vec<[Term; 3]>,
}

impl EventRecord {
    pub fn id(&self, cfg: &GeneratorConfig) -> String {
        cfg.format_id(self.index)
    }

    pub fn is_tag_triple(t: &[Term; 3]) -> bool {
        t[1] == ex("hasTag")
    }
}

pub fn generate_events(cfg: &GeneratorConfig, count: u64) -> Vec<EventRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (has_obs, flow, chlorine, has_tag, has_id, from_sensor) = (
        ex("hasObservation"),
        ex("observeFlow"),
        ex("observeChlorine"),
        ex("hasTag"),
        ex("hasId"),
        ex("fromSensor"),
    );
    (0..count)
        .map(|i| {
            let kind = if cfg.is_chlorine(i) {
                ObservationKind::Chlorine
            } else {
                ObservationKind::Flow
            };
            let obs = ex(&format!("observation/{i}"));
            let meas = ex(&format!("measurement/{i}"));
            let sensor = (i % u64::from(cfg.n_sensors)) as u32;
            let tags: Vec<u32> = sample(&mut rng, cfg.tag_pool as usize, cfg.tags_per_observation as usize)
                .into_iter()
                .map(|k| k as u32)
                .collect();
            let mut triples = Vec::with_capacity(cfg.triples_per_event());
            triples.push([ex(&format!("message/{i}")), has_obs.clone(), obs.clone()]);
            let pred = match kind {
                ObservationKind::Flow => flow.clone(),
                ObservationKind::Chlorine => chlorine.clone(),
            };
            triples.push([obs.clone(), pred, meas.clone()]);
            for k in &tags {
                triples.push([meas.clone(), has_tag.clone(), ex(&format!("tag/{k}"))]);
            }
            triples.push([obs.clone(), has_id.clone(), Term::string(cfg.format_id(i))]);
            triples.push([obs, from_sensor.clone(), ex(&format!("sensor/{sensor}"))]);
            EventRecord {
                index: i,
                kind,
                sensor,
                tags,
                triples,
            }
        })
        .collect()
}

fn stream_of(cfg: &GeneratorConfig, event: u64) -> StreamId {
    let k = u64::from(cfg.n_streams);
    StreamId(match cfg.partition {
        Partition::RoundRobin => (event % k) as u32,
        Partition::Hash => {
            // SplitMix64 finalizer keyed by the seed.
            let mut z = event ^ cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            ((z ^ (z >> 31)) % k) as u32
        }
    })
}

/// Interns and timestamps events into a stream log ordered by arrival
/// (timestamp, then generation order).
pub fn timestamp_events(cfg: &GeneratorConfig, events: &[EventRecord], dict: &Dictionary) -> Vec<TimestampedTriple> {
    let mut out = Vec::with_capacity(events.len() * cfg.triples_per_event());
    let mut j = 0u64;
    for ev in events {
        let stream = stream_of(cfg, ev.index);
        for t in &ev.triples {
            let triple = Triple::new(dict.intern(&t[0]), dict.intern(&t[1]), dict.intern(&t[2]));
            let time = cfg.grid_time(j);
            j += 1;
            let tt = match cfg.async_split_ms {
                Some(d) if EventRecord::is_tag_triple(t) => TimestampedTriple::new(triple, time + d, StreamId(1)),
                Some(_) => TimestampedTriple::new(triple, time, StreamId(0)),
                None => TimestampedTriple::new(triple, time, stream),
            };
            out.push(tt);
        }
    }
    if cfg.async_split_ms.is_some() {
        // Stable: ties keep generation order.
        out.sort_by_key(|tt| tt.t);
    }
    out
}

/// Convenience: events and their stream log in one step.
pub fn generate_log(cfg: &GeneratorConfig, count: u64, dict: &Dictionary) -> Vec<TimestampedTriple> {
    timestamp_events(cfg, &generate_events(cfg, count), dict)
}

/// Index of the event a generated triple belongs to, read from its subject
/// (`message/i`, `observation/i` or `measurement/i`).
pub fn event_index(dict: &Dictionary, triple: &Triple) -> Option<u64> {
    dict.with_term(triple.s, |t| t.lexical().rsplit('/').next()?.parse().ok())
        .ok()
        .flatten()
}

/// Splits a log by stream, preserving order.
pub fn split_by_stream(log: &[TimestampedTriple]) -> Vec<Vec<TimestampedTriple>> {
    let k = log.iter().map(|t| t.stream.0 as usize + 1).max().unwrap_or(0);
    let mut parts = vec![Vec::new(); k];
    for tt in log {
        parts[tt.stream.0 as usize].push(*tt);
    }
    parts
}

/// Merges per-stream partitions back into one stream-0 log, ordered by
/// timestamp with ties broken by `order_key` (generation order).
pub fn merge_partitions(parts: &[Vec<TimestampedTriple>], order_key: impl Fn(&TimestampedTriple) -> u64) -> Vec<TimestampedTriple> {
    let mut all: Vec<TimestampedTriple> = parts.iter().flatten().copied().collect();
    all.sort_by_key(|tt| (tt.t, order_key(tt)));
    all.into_iter()
        .map(|tt| TimestampedTriple::new(tt.triple, tt.t, StreamId(0)))
        .collect()
}

fn sensor_triples(cfg: &GeneratorConfig, label_pad: usize) -> String {
    let mut doc = String::new();
    for s in 0..cfg.n_sensors {
        let sensor = format!("<{EX}sensor/{s}>");
        let mut label = format!("Sensor {s}");
        if label_pad > 0 {
            label.push(' ');
            label.extend(std::iter::repeat_n('x', label_pad));
        }
        let _ = writeln!(doc, "{sensor} <{EX}label> {} .", Term::string(label));
        let _ = writeln!(doc, "{sensor} <{EX}manufacturerId> {} .", Term::string(format!("M{}", s % 7)));
        let _ = writeln!(doc, "{sensor} <{EX}sectorId> {} .", Term::string(format!("S{}", s % 5)));
    }
    doc
}

/// Static sensor descriptions as a triple document: label, manufacturer id
/// and sector id for each of the `n_sensors` sensors. With `target_bytes`,
/// labels are padded so the document lands on that size (sensor count is
/// kept; the padding is spread evenly).
pub fn generate_static(cfg: &GeneratorConfig, target_bytes: Option<usize>) -> String {
    let base = sensor_triples(cfg, 0);
    let Some(target) = target_bytes else {
        return base;
    };
    let n = cfg.n_sensors as usize;
    if target <= base.len() {
        return base;
    }
    // Padding adds one separator space plus the pad characters per label.
    let per = (target - base.len()) / n;
    let pad = per.saturating_sub(1);
    let mut doc = sensor_triples(cfg, pad);
    // Top up the remainder with a comment line so the size is exact when possible.
    if doc.len() + 2 < target {
        let rest = target - doc.len() - 2;
        doc.push('#');
        doc.extend(std::iter::repeat_n(' ', rest));
        doc.push('\n');
    }
    doc
}

/// Anything that accepts stream elements, possibly with backpressure.
pub trait Sink {
    /// Delivers one element, waiting at most `timeout` for capacity.
    fn send(&mut self, tt: TimestampedTriple, timeout: Duration) -> Result<(), GenError>;
}

impl Sink for Vec<TimestampedTriple> {
    fn send(&mut self, tt: TimestampedTriple, _: Duration) -> Result<(), GenError> {
        self.push(tt);
        Ok(())
    }
}

impl Sink for SyncSender<TimestampedTriple> {
    fn send(&mut self, tt: TimestampedTriple, timeout: Duration) -> Result<(), GenError> {
        let deadline = Instant::now() + timeout;
        let mut item = tt;
        loop {
            match self.try_send(item) {
                Ok(()) => return Ok(()),
                Err(TrySendError::Disconnected(_)) => return Err(GenError::Disconnected),
                Err(TrySendError::Full(back)) => {
                    if Instant::now() >= deadline {
                        return Err(GenError::Backpressure(timeout));
                    }
                    item = back;
                    std::thread::yield_now();
                }
            }
        }
    }
}

impl<F: FnMut(TimestampedTriple) -> Result<(), GenError>> Sink for F {
    fn send(&mut self, tt: TimestampedTriple, _: Duration) -> Result<(), GenError> {
        self(tt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pacing {
    /// Sleep until each element's timestamp (relative to the first) is due.
    RealTime,
    /// No waiting.
    AsFastAsPossible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmissionLog {
    pub count: usize,
    #[serde(with = "duration_ms")]
    pub wall: Duration,
    pub first_t: Option<u64>,
    pub last_t: Option<u64>,
}

mod duration_ms {
    pub fn serialize<S: serde::Serializer>(d: &std::time::Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1000.0)
    }
}

/// Delivers a log to a sink. Real-time pacing schedules every element
/// against the start instant, so a late element is sent immediately and
/// delays never accumulate.
pub fn emit(
    log: &[TimestampedTriple],
    sink: &mut impl Sink,
    pacing: Pacing,
    timeout: Duration,
) -> Result<EmissionLog, GenError> {
    emit_from(log, sink, pacing, timeout, Instant::now())
}

fn emit_from(
    log: &[TimestampedTriple],
    sink: &mut impl Sink,
    pacing: Pacing,
    timeout: Duration,
    start: Instant,
) -> Result<EmissionLog, GenError> {
    let t0 = log.first().map(|tt| tt.t);
    for tt in log {
        if let (Pacing::RealTime, Some(t0)) = (pacing, t0) {
            let due = start + Duration::from_millis(tt.t - t0);
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        sink.send(*tt, timeout)?;
    }
    Ok(EmissionLog {
        count: log.len(),
        wall: start.elapsed(),
        first_t: t0,
        last_t: log.last().map(|tt| tt.t),
    })
}

/// One emitter thread per stream, all paced against a shared start instant
/// and timestamp origin. Returns per-stream logs in stream order.
pub fn emit_streams<S: Sink + Send>(
    parts: Vec<Vec<TimestampedTriple>>,
    sinks: Vec<S>,
    pacing: Pacing,
    timeout: Duration,
) -> Result<Vec<EmissionLog>, GenError> {
    assert_eq!(parts.len(), sinks.len(), "one sink per stream");
    let origin = parts.iter().filter_map(|p| p.first().map(|t| t.t)).min();
    let start = Instant::now();
    std::thread::scope(|scope| {
        let handles: Vec<_> = parts
            .into_iter()
            .zip(sinks)
            .map(|(part, mut sink)| {
                scope.spawn(move || {
                    // Delay each stream's first element relative to the common origin.
                    let offset = match (origin, part.first()) {
                        (Some(o), Some(f)) => Duration::from_millis(f.t - o),
                        _ => Duration::ZERO,
                    };
                    let begin = start + offset;
                    if pacing == Pacing::RealTime {
                        let now = Instant::now();
                        if begin > now {
                            std::thread::sleep(begin - now);
                        }
                    }
                    emit_from(&part, &mut sink, pacing, timeout, begin)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("emitter thread panicked"))
            .collect()
    })
}
