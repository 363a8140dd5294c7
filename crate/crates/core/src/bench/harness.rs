use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::engine::{CostModel, DataDrivenConfig, DataDrivenEngine, TimeDrivenConfig, TimeDrivenEngine};
use crate::generator::{generate_log, generate_static, Emission, GeneratorConfig};
use crate::oracle::{to_terms, Oracle, TermAnswerSet, ORACLE_CAP};
use crate::query::{ContinuousQuery, EngineKind, WindowRange};
use crate::rdf::{load_static_graph, Dictionary, StaticGraph, TimestampedTriple};

use super::mcr::{compute_mcr, MemoryTrace, BYTES_PER_MB};
use super::memory::VirtualSampler;
use super::stats::{mean, ols, per_triple_time, LinearFit};
use super::BenchError;

/// The input parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// Total stream rate, triples per second.
    Rate,
    /// Number of triples fed to the data-driven engine.
    Triples,
    /// Window range in seconds.
    Window,
    /// Number of input streams at constant total rate.
    Streams,
    /// Static data size in MB.
    StaticMb,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Rate => "rate",
            SweepParam::Triples => "triples",
            SweepParam::Window => "window",
            SweepParam::Streams => "streams",
            SweepParam::StaticMb => "static-mb",
        }
    }

    pub fn applies_to(self, engine: EngineKind) -> bool {
        match engine {
            EngineKind::TimeDriven => !matches!(self, SweepParam::Triples),
            EngineKind::DataDriven => matches!(self, SweepParam::Triples | SweepParam::Streams | SweepParam::StaticMb),
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "rate" => SweepParam::Rate,
            "triples" => SweepParam::Triples,
            "window" => SweepParam::Window,
            "streams" => SweepParam::Streams,
            "static-mb" => SweepParam::StaticMb,
            other => {
                return Err(format!(
                    "unknown sweep parameter {other:?} (expected rate, triples, window, streams or static-mb)"
                ))
            }
        })
    }
}

/// One sweep: an engine, a query, a parameter grid and the fixed values of
/// everything else.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub engine: EngineKind,
    pub query_name: String,
    pub query: ContinuousQuery,
    pub sweep: SweepParam,
    pub grid: Vec<f64>,
    /// Measured executions per grid point (time-driven).
    pub iterations: usize,
    /// Stream time run through a throwaway engine before measuring.
    pub warmup_s: f64,
    pub warmup_rate: f64,
    /// Total rate, triples per second.
    pub rate: f64,
    /// Window range override in ms; the query's own range otherwise.
    pub range_ms: Option<u64>,
    /// Triples fed to the data-driven engine.
    pub triples: u64,
    pub streams: u32,
    /// Static document size; `None` keeps the bare sensor descriptions.
    pub static_mb: Option<f64>,
    /// Seed, sensors, tags and other generator knobs; rate, streams and
    /// emission are set per grid point.
    pub generator: GeneratorConfig,
    pub cost: CostModel,
    /// Upper bound on the log size handed to the oracle; 0 disables checks.
    pub check_limit: usize,
    pub sample_interval_ms: u64,
}

impl ExperimentSpec {
    pub fn new(engine: EngineKind, query_name: &str, query: ContinuousQuery, sweep: SweepParam, grid: Vec<f64>) -> Self {
        Self {
            engine,
            query_name: query_name.to_string(),
            query,
            sweep,
            grid,
            iterations: 20,
            warmup_s: 90.0,
            warmup_rate: 100.0,
            rate: 1000.0,
            range_ms: None,
            triples: 10_000,
            streams: 1,
            static_mb: None,
            generator: GeneratorConfig::default(),
            cost: CostModel::Measured { slowdown: 1.0, repeats: 1 },
            check_limit: 20_000,
            sample_interval_ms: super::DEFAULT_SAMPLE_INTERVAL_MS,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Spec(m));
        if self.grid.is_empty() {
            return bad("grid is empty".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !self.sweep.applies_to(self.engine) {
            return bad(format!("the {} engine cannot sweep {}", self.engine, self.sweep.name()));
        }
        if self.grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("grid values must be finite and non-negative".into());
        }
        let positive = matches!(self.sweep, SweepParam::Rate | SweepParam::Triples | SweepParam::Window | SweepParam::Streams);
        if positive && self.grid.iter().any(|v| *v <= 0.0) {
            return bad(format!("{} values must be positive", self.sweep.name()));
        }
        if self.sweep == SweepParam::Streams && self.grid.iter().any(|v| v.fract() != 0.0) {
            return bad("stream counts must be whole numbers".into());
        }
        if !(self.rate > 0.0 && self.warmup_rate > 0.0) || self.warmup_s < 0.0 {
            return bad("rates must be positive and warm-up non-negative".into());
        }
        if self.sample_interval_ms == 0 {
            return bad("sampling interval must be positive".into());
        }
        if !self.query.has_stream_pattern() {
            return bad("query reads no stream".into());
        }
        Ok(())
    }

    fn point(&self, value: f64) -> Point {
        let mut p = Point {
            rate: self.rate,
            range_ms: self.range_ms,
            triples: self.triples,
            streams: self.streams,
            static_mb: self.static_mb,
        };
        match self.sweep {
            SweepParam::Rate => p.rate = value,
            SweepParam::Triples => p.triples = value as u64,
            SweepParam::Window => p.range_ms = Some((value * 1000.0).round() as u64),
            SweepParam::Streams => p.streams = value as u32,
            SweepParam::StaticMb => p.static_mb = Some(value),
        }
        p
    }
}

/// Concrete parameters of one grid point.
#[derive(Debug, Clone, Copy)]
struct Point {
    rate: f64,
    range_ms: Option<u64>,
    triples: u64,
    streams: u32,
    static_mb: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowVerdict {
    Exact,
    Mismatch,
    /// Some execution overran its STEP; timings are not meaningful.
    Saturated,
    /// No oracle check was possible (disabled, or the input exceeds the
    /// oracle's bound).
    Unchecked,
}

/// One grid point's measurements. Optional columns stay empty in CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub engine: EngineKind,
    pub query: String,
    pub param: String,
    pub value: f64,
    /// Mean execution time over the measured executions (time-driven).
    pub exec_time_ms: Option<f64>,
    /// Wall time to process all triples (data-driven).
    pub total_t_ms: Option<f64>,
    pub t_per_triple_ms: Option<f64>,
    /// Mean per execution (time-driven) or total (data-driven).
    pub probe_count: f64,
    pub mcr_mb_s: Option<f64>,
    pub mem_peak_mb: f64,
    pub overrun_rate: f64,
    pub verdict: RowVerdict,
    /// Share of oracle answers the engine produced, for checked runs.
    pub completeness: Option<f64>,
    pub triples: u64,
    pub warmup_s: f64,
    /// `no-warmup` when the experiment skipped warm-up.
    pub warning: String,
    /// R² of the sweep's linear fit over non-saturated rows.
    pub fit_r2: Option<f64>,
}

impl BenchRow {
    /// The timing a trend is fitted on.
    pub fn time_ms(&self) -> Option<f64> {
        self.exec_time_ms.or(self.total_t_ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares line of time against the swept value, saturated rows
    /// excluded.
    pub fit: Option<LinearFit>,
    /// Memory traces per grid point, in row order.
    pub traces: Vec<MemoryTrace>,
}

impl BenchReport {
    fn from_rows(mut rows: Vec<BenchRow>, traces: Vec<MemoryTrace>) -> Self {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.verdict != RowVerdict::Saturated)
            .filter_map(|r| Some((r.value, r.time_ms()?)))
            .collect();
        let fit = ols(&points);
        for r in &mut rows {
            r.fit_r2 = fit.map(|f| f.r2);
        }
        Self { rows, fit, traces }
    }

    pub fn write_csv(&self, w: impl Write) -> Result<(), BenchError> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn any_saturated(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == RowVerdict::Saturated)
    }

    pub fn any_mismatch(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == RowVerdict::Mismatch)
    }
}

/// Runs the experiment on the engine it names.
pub fn run(spec: &ExperimentSpec) -> Result<BenchReport, BenchError> {
    match spec.engine {
        EngineKind::TimeDriven => run_time_driven(spec),
        EngineKind::DataDriven => run_data_driven(spec),
    }
}

/// Inputs shared by every run at one grid point.
struct Workload {
    query: ContinuousQuery,
    dict: Arc<Dictionary>,
    static_graph: Arc<StaticGraph>,
    log: Vec<TimestampedTriple>,
    cfg: GeneratorConfig,
}

fn workload(spec: &ExperimentSpec, p: &Point, triples: u64) -> Result<Workload, BenchError> {
    let mut query = spec.query.clone();
    if let Some(r) = p.range_ms {
        query = query.with_range(WindowRange::Millis(r));
    }
    if p.streams > 1 {
        query = query.over_streams(p.streams);
    }
    let cfg = GeneratorConfig {
        emission: match spec.engine {
            EngineKind::TimeDriven => Emission::Rate(p.rate),
            EngineKind::DataDriven => Emission::Batch { virtual_rate: p.rate },
        },
        n_streams: p.streams,
        ..spec.generator.clone()
    };
    cfg.validate()?;
    let dict = Dictionary::shared();
    let doc = generate_static(&cfg, p.static_mb.map(|mb| (mb * BYTES_PER_MB) as usize));
    let static_graph = Arc::new(load_static_graph(&doc, &dict)?);
    let events = triples.div_ceil(cfg.triples_per_event() as u64).max(1);
    let log = generate_log(&cfg, events, &dict);
    Ok(Workload {
        query,
        dict,
        static_graph,
        log,
        cfg,
    })
}

fn warmup_log(spec: &ExperimentSpec, w: &Workload) -> Vec<TimestampedTriple> {
    let cfg = GeneratorConfig {
        emission: Emission::Rate(spec.warmup_rate),
        seed: w.cfg.seed.wrapping_add(1),
        ..w.cfg.clone()
    };
    let triples = (spec.warmup_s * spec.warmup_rate) as u64;
    if triples == 0 {
        return Vec::new();
    }
    generate_log(&cfg, triples.div_ceil(cfg.triples_per_event() as u64), &w.dict)
}

fn warning(spec: &ExperimentSpec) -> String {
    if spec.warmup_s == 0.0 {
        "no-warmup".into()
    } else {
        String::new()
    }
}

fn query_step(q: &ContinuousQuery) -> u64 {
    q.stream_windows().iter().map(|w| w.window.step_ms).max().unwrap_or(1000)
}

fn query_range(q: &ContinuousQuery) -> WindowRange {
    let windows = q.stream_windows();
    if windows.iter().any(|w| w.window.range == WindowRange::Unbounded) {
        return WindowRange::Unbounded;
    }
    WindowRange::Millis(windows.iter().filter_map(|w| w.window.range.millis()).max().unwrap_or(0))
}

/// For each grid point: a warm-up run on a throwaway engine, then a run
/// whose windows are filled before `iterations` executions are measured.
/// Runs under the virtual clock; execution times come from the cost model.
/// Correctness is checked on the first measured executions whose window
/// contents fit the oracle bound.
pub fn run_time_driven(spec: &ExperimentSpec) -> Result<BenchReport, BenchError> {
    if spec.engine != EngineKind::TimeDriven {
        return Err(BenchError::Spec("run_time_driven needs a time-driven spec".into()));
    }
    spec.validate()?;
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for &value in &spec.grid {
        let p = spec.point(value);
        let probe = workload(spec, &p, 0)?;
        let step = query_step(&probe.query);
        let fill = query_range(&probe.query).millis().unwrap_or(0);
        let span = fill.div_ceil(step) * step + spec.iterations as u64 * step;
        let triples = (p.rate * span as f64 / 1000.0).ceil() as u64;
        let w = workload(spec, &p, triples)?;
        let config = TimeDrivenConfig { cost: spec.cost };

        let warm = warmup_log(spec, &w);
        if !warm.is_empty() {
            let mut e = TimeDrivenEngine::new(Arc::clone(&w.dict), Arc::clone(&w.static_graph), config);
            e.register_query(&w.query, w.cfg.start_ms)?;
            let until = warm.last().map_or(0, |tt| tt.t);
            e.replay(&warm, until)?;
        }

        let mut engine = TimeDrivenEngine::new(Arc::clone(&w.dict), Arc::clone(&w.static_graph), config);
        engine.register_query(&w.query, w.cfg.start_ms)?;
        let mut sampler = VirtualSampler::new(spec.sample_interval_ms);
        let mut results = Vec::new();
        for tt in &w.log {
            if engine.next_due().is_some_and(|d| d < tt.t) {
                results.extend(engine.tick(tt.t - 1)?);
            }
            sampler.advance(tt.t, || engine.approx_bytes());
            engine.push(*tt)?;
        }
        // Whole events are generated, so the log can run slightly past the span.
        let end = (w.cfg.start_ms + span).max(w.log.last().map_or(0, |tt| tt.t));
        results.extend(engine.tick(end)?);
        let trace = sampler.finish(end, || engine.approx_bytes());

        let measured: Vec<_> = results
            .iter()
            .filter(|r| r.instant >= w.cfg.start_ms + fill)
            .take(spec.iterations)
            .collect();
        let saturated = results.iter().any(|r| r.overrun);
        let overrun_rate = if measured.is_empty() {
            0.0
        } else {
            measured.iter().filter(|r| r.overrun).count() as f64 / measured.len() as f64
        };
        let (verdict, completeness) = if saturated {
            (RowVerdict::Saturated, None)
        } else {
            check_time_driven(spec, &w, &measured)?
        };
        rows.push(BenchRow {
            engine: EngineKind::TimeDriven,
            query: spec.query_name.clone(),
            param: spec.sweep.name().into(),
            value,
            exec_time_ms: mean(&measured.iter().map(|r| r.exec_ms).collect::<Vec<_>>()),
            total_t_ms: None,
            t_per_triple_ms: None,
            probe_count: mean(&measured.iter().map(|r| r.probe_count as f64).collect::<Vec<_>>()).unwrap_or(0.0),
            // The sawtooth settles once the windows are full.
            mcr_mb_s: compute_mcr(&trace.since((w.cfg.start_ms + fill) as f64))
                .ok()
                .map(|m| m.mcr_mb_s),
            mem_peak_mb: trace.peak_bytes() as f64 / BYTES_PER_MB,
            overrun_rate,
            verdict,
            completeness,
            triples: w.log.len() as u64,
            warmup_s: spec.warmup_s,
            warning: warning(spec),
            fit_r2: None,
        });
        traces.push(trace);
    }
    Ok(BenchReport::from_rows(rows, traces))
}

/// Measured executions checked against the oracle.
const CHECKED_EXECUTIONS: usize = 3;

fn check_time_driven(
    spec: &ExperimentSpec,
    w: &Workload,
    measured: &[&crate::engine::ExecutionResult],
) -> Result<(RowVerdict, Option<f64>), BenchError> {
    if spec.check_limit == 0 || measured.is_empty() {
        return Ok((RowVerdict::Unchecked, None));
    }
    let range = query_range(&w.query);
    let mut expected_total = 0usize;
    let mut found = 0usize;
    let mut exact = true;
    let mut checked = 0;
    for r in measured.iter().take(CHECKED_EXECUTIONS) {
        // Only the triples some window can still see matter at this instant.
        let slice: Vec<TimestampedTriple> = w
            .log
            .iter()
            .filter(|tt| range.contains(tt.t, r.instant))
            .copied()
            .collect();
        if slice.len() > spec.check_limit.min(ORACLE_CAP) {
            continue;
        }
        let oracle = Oracle::new(&slice, &w.dict, &w.static_graph)?;
        let expected = oracle.eval(&w.query, r.instant)?;
        let got = to_terms(&r.answers, &w.dict)?;
        expected_total += expected.len();
        found += expected.intersection(&got).count();
        exact &= expected == got;
        checked += 1;
    }
    if checked == 0 {
        return Ok((RowVerdict::Unchecked, None));
    }
    let completeness = if expected_total == 0 {
        1.0
    } else {
        found as f64 / expected_total as f64
    };
    Ok((if exact { RowVerdict::Exact } else { RowVerdict::Mismatch }, Some(completeness)))
}

/// For each grid point: a warm-up run on a throwaway engine, one
/// instrumented pass that samples memory in stream time, then `iterations`
/// timed passes feeding all triples back to back on fresh engines; their
/// mean wall time `T` gives `t = T / N`. Runs up to the check
/// limit are compared with the oracle: the union of deltas against the
/// landmark answers for unbounded windows, otherwise against the union of
/// the oracle's answers at every arrival instant.
pub fn run_data_driven(spec: &ExperimentSpec) -> Result<BenchReport, BenchError> {
    if spec.engine != EngineKind::DataDriven {
        return Err(BenchError::Spec("run_data_driven needs a data-driven spec".into()));
    }
    spec.validate()?;
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for &value in &spec.grid {
        let p = spec.point(value);
        let w = workload(spec, &p, p.triples)?;
        let config = DataDrivenConfig::default();

        let warm = warmup_log(spec, &w);
        if !warm.is_empty() {
            let mut e = DataDrivenEngine::new(Arc::clone(&w.dict), Arc::clone(&w.static_graph), config);
            e.register_query(&w.query)?;
            e.replay(&warm)?;
        }

        // Instrumented pass: memory trace and output for the oracle check.
        let mut engine = DataDrivenEngine::new(Arc::clone(&w.dict), Arc::clone(&w.static_graph), config);
        engine.register_query(&w.query)?;
        let mut sampler = VirtualSampler::new(spec.sample_interval_ms);
        let mut emitted = crate::algebra::AnswerSet::new();
        let keep = spec.check_limit > 0 && w.log.len() <= spec.check_limit.min(ORACLE_CAP);
        for tt in &w.log {
            sampler.advance(tt.t, || engine.approx_bytes());
            for d in engine.on_arrival(*tt)? {
                if keep {
                    emitted.extend(d.new_answers);
                }
            }
        }
        let end = w.log.last().map_or(0, |tt| tt.t);
        let trace = sampler.finish(end, || engine.approx_bytes());
        let probes = engine.total_probes();
        drop(engine);

        // Timed passes on fresh engines.
        let mut times = Vec::with_capacity(spec.iterations);
        for _ in 0..spec.iterations {
            let mut engine = DataDrivenEngine::new(Arc::clone(&w.dict), Arc::clone(&w.static_graph), config);
            engine.register_query(&w.query)?;
            let started = Instant::now();
            for tt in &w.log {
                std::hint::black_box(engine.on_arrival(*tt)?);
            }
            times.push(started.elapsed());
        }
        let total = times.iter().sum::<std::time::Duration>() / spec.iterations as u32;
        let n = w.log.len() as u64;

        let (verdict, completeness) = if keep {
            check_data_driven(&w, &to_terms(&emitted, &w.dict)?)?
        } else {
            (RowVerdict::Unchecked, None)
        };
        rows.push(BenchRow {
            engine: EngineKind::DataDriven,
            query: spec.query_name.clone(),
            param: spec.sweep.name().into(),
            value,
            exec_time_ms: None,
            total_t_ms: Some(total.as_secs_f64() * 1000.0),
            t_per_triple_ms: per_triple_time(total, n).ok(),
            probe_count: probes as f64,
            mcr_mb_s: compute_mcr(&trace).ok().map(|m| m.mcr_mb_s),
            mem_peak_mb: trace.peak_bytes() as f64 / BYTES_PER_MB,
            overrun_rate: 0.0,
            verdict,
            completeness,
            triples: n,
            warmup_s: spec.warmup_s,
            warning: warning(spec),
            fit_r2: None,
        });
        traces.push(trace);
    }
    Ok(BenchReport::from_rows(rows, traces))
}

fn check_data_driven(w: &Workload, got: &TermAnswerSet) -> Result<(RowVerdict, Option<f64>), BenchError> {
    let oracle = Oracle::new(&w.log, &w.dict, &w.static_graph)?;
    let expected = if query_range(&w.query) == WindowRange::Unbounded {
        oracle.eval_landmark(&w.query)?
    } else {
        oracle.eval_arrivals(&w.query)?
    };
    let completeness = if expected.is_empty() {
        1.0
    } else {
        expected.intersection(got).count() as f64 / expected.len() as f64
    };
    let verdict = if &expected == got { RowVerdict::Exact } else { RowVerdict::Mismatch };
    Ok((verdict, Some(completeness)))
}
