#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsplab::generator::{generate_log, generate_static, Emission, GeneratorConfig};
use rsplab::rdf::{load_static_graph, Dictionary, StaticGraph, TimestampedTriple};

/// A generated trace with its dictionary and static sensor graph.
pub struct Trace {
    pub cfg: GeneratorConfig,
    pub dict: Arc<Dictionary>,
    pub static_graph: Arc<StaticGraph>,
    pub log: Vec<TimestampedTriple>,
    pub range_ms: u64,
}

/// Seeded random workload: at most `max_triples` triples, varied rate,
/// sensor and tag counts, chlorine density and window range (5-20 s).
pub fn random_trace(seed: u64, max_triples: usize) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    let cfg = GeneratorConfig {
        seed,
        n_sensors: rng.gen_range(1..=12),
        tags_per_observation: 3,
        tag_pool: rng.gen_range(3..=15),
        flow_per_chlorine: rng.gen_range(0..=20),
        emission: Emission::Rate(rng.gen_range(150.0..1500.0)),
        start_ms: rng.gen_range(0..3000),
        ..Default::default()
    };
    let events = rng.gen_range(1..=(max_triples / cfg.triples_per_event()) as u64);
    let range_ms = rng.gen_range(5..=20) * 1000;
    trace_for(cfg, events, range_ms)
}

pub fn trace_for(cfg: GeneratorConfig, events: u64, range_ms: u64) -> Trace {
    let dict = Arc::new(Dictionary::new());
    let log = generate_log(&cfg, events, &dict);
    let static_graph = Arc::new(load_static_graph(&generate_static(&cfg, None), &dict).expect("generated static data parses"));
    Trace {
        cfg,
        dict,
        static_graph,
        log,
        range_ms,
    }
}

impl Trace {
    pub fn last_t(&self) -> u64 {
        self.log.last().map_or(0, |t| t.t)
    }
}
