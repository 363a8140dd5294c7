use std::sync::Arc;

use serde::Serialize;

use crate::engine::{CostModel, TimeDrivenConfig, TimeDrivenEngine};
use crate::generator::{generate_log, GeneratorConfig, Emission};
use crate::query::ContinuousQuery;
use crate::rdf::{Dictionary, StaticGraph};

use super::BenchError;

/// What one held rate did to the engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeOutcome {
    pub rate: f64,
    pub sustained: bool,
    pub max_exec_ms: f64,
    pub backlog: u64,
}

/// Something that can be held at a stream rate and report whether it kept up.
pub trait RateProbe {
    fn probe(&mut self, rate: f64) -> Result<ProbeOutcome, BenchError>;
}

/// Engine stand-in whose execution takes `c · rate · step`; it sustains
/// exactly the rates up to `1 / c`.
#[derive(Debug, Clone, Copy)]
pub struct StubProbe {
    pub c: f64,
    pub step_ms: u64,
}

impl RateProbe for StubProbe {
    fn probe(&mut self, rate: f64) -> Result<ProbeOutcome, BenchError> {
        let exec_ms = self.c * rate * self.step_ms as f64;
        let sustained = exec_ms <= self.step_ms as f64;
        Ok(ProbeOutcome {
            rate,
            sustained,
            max_exec_ms: exec_ms,
            backlog: if sustained { 0 } else { 1 },
        })
    }
}

/// Holds the time-driven engine at a rate under the virtual clock. The
/// window is filled first, then the rate is held for `max(10·step, 10 s)`.
/// The rate is sustained when no execution overran and the backlog is empty
/// once the last execution finished.
#[derive(Debug, Clone)]
pub struct EngineProbe {
    pub query: ContinuousQuery,
    pub generator: GeneratorConfig,
    pub cost: CostModel,
    pub static_graph: Option<String>,
}

impl EngineProbe {
    pub fn new(query: ContinuousQuery, seed: u64, cost: CostModel) -> Self {
        Self {
            query,
            generator: GeneratorConfig {
                seed,
                ..GeneratorConfig::default()
            },
            cost,
            static_graph: None,
        }
    }

    fn step_ms(&self) -> u64 {
        self.query.stream_windows().iter().map(|w| w.window.step_ms).max().unwrap_or(1000)
    }

    fn range_ms(&self) -> u64 {
        self.query
            .stream_windows()
            .iter()
            .filter_map(|w| w.window.range.millis())
            .max()
            .unwrap_or(0)
    }

    pub fn hold_ms(&self) -> u64 {
        (10 * self.step_ms()).max(10_000)
    }
}

impl RateProbe for EngineProbe {
    fn probe(&mut self, rate: f64) -> Result<ProbeOutcome, BenchError> {
        let step = self.step_ms();
        let span = self.range_ms() + self.hold_ms();
        let cfg = GeneratorConfig {
            emission: Emission::Rate(rate),
            ..self.generator.clone()
        };
        let triples = (rate * span as f64 / 1000.0).ceil() as u64;
        let events = triples.div_ceil(cfg.triples_per_event() as u64).max(1);
        let dict = Dictionary::shared();
        let static_graph = match &self.static_graph {
            Some(doc) => crate::rdf::load_static_graph(doc, &dict)?,
            None => StaticGraph::default(),
        };
        let log = generate_log(&cfg, events, &dict);
        let mut engine = TimeDrivenEngine::new(dict, Arc::new(static_graph), TimeDrivenConfig { cost: self.cost });
        engine.register_query(&self.query, cfg.start_ms)?;
        let last = log.last().map_or(cfg.start_ms, |tt| tt.t);
        let results = engine.replay(&log, last + 2 * step)?;
        let max_exec_ms = results.iter().map(|r| r.exec_ms).fold(0.0, f64::max);
        let overrun = results.iter().any(|r| r.overrun);
        let backlog = engine.backlog();
        Ok(ProbeOutcome {
            rate,
            sustained: !overrun && backlog == 0,
            max_exec_ms,
            backlog,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateMax {
    /// Largest rate found to sustain.
    pub rate: f64,
    /// Whether `rate · (1 + 2·tolerance)` overran when re-checked.
    pub upper_overruns: bool,
    pub history: Vec<ProbeOutcome>,
}

/// Binary search for the largest sustained rate in `[lo, hi]`, stopping when
/// the bracket is narrower than `tolerance` relative to its lower end.
pub fn find_rate_max(probe: &mut impl RateProbe, lo: f64, hi: f64, tolerance: f64) -> Result<RateMax, BenchError> {
    if !(lo > 0.0 && hi > lo && tolerance > 0.0) {
        return Err(BenchError::Spec(format!(
            "need 0 < lo < hi and a positive tolerance (lo={lo}, hi={hi}, tol={tolerance})"
        )));
    }
    let mut history = Vec::new();
    let low = probe.probe(lo)?;
    history.push(low);
    if !low.sustained {
        return Err(BenchError::BracketInvalid(format!("low end {lo} already overruns")));
    }
    let high = probe.probe(hi)?;
    history.push(high);
    if high.sustained {
        return Err(BenchError::BracketInvalid(format!("high end {hi} still sustains")));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tolerance * lo {
        let mid = (lo + hi) / 2.0;
        let out = probe.probe(mid)?;
        history.push(out);
        if out.sustained {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let check = probe.probe(lo * (1.0 + 2.0 * tolerance))?;
    history.push(check);
    Ok(RateMax {
        rate: lo,
        upper_overruns: !check.sustained,
        history,
    })
}
