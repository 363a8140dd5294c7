use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::Sender;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crate::algebra::{
    finalize, join_tables, match_bgp, AnswerSet, BindingTable, CompiledPattern, PatternInput, QueryPlan,
    WindowBuffer,
};
use crate::query::{capability_check, ContinuousQuery, EngineKind, ReportPolicy, WindowRange};
use crate::rdf::{Dictionary, StaticGraph, StreamId, TimestampedTriple};

use super::{render_answers, EngineError, ExecutionRecord, QueryId};

/// How an execution's duration is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    /// Wall time of the evaluation multiplied by `slowdown`, which emulates
    /// a proportionally slower machine. With `repeats > 1` the evaluation is
    /// timed that many times and the fastest run counts, which filters out
    /// scheduler stalls.
    Measured { slowdown: f64, repeats: u32 },
    /// `base_ms + per_triple_ms` times the number of buffered triples in the
    /// snapshot; deterministic.
    Synthetic { base_ms: f64, per_triple_ms: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDrivenConfig {
    pub cost: CostModel,
}

impl Default for TimeDrivenConfig {
    fn default() -> Self {
        Self {
            cost: CostModel::Measured { slowdown: 1.0, repeats: 1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionResult {
    pub query: QueryId,
    pub name: String,
    pub instant: u64,
    pub answers: AnswerSet,
    pub exec_ms: f64,
    pub probe_count: u64,
    /// Set when `exec_ms` exceeds the query's STEP.
    pub overrun: bool,
    /// Buffered triples visible to this execution.
    pub snapshot_triples: usize,
    /// How long after its scheduled instant this execution finished, given
    /// earlier executions that ran late.
    pub lag_ms: f64,
}

impl ExecutionResult {
    pub fn record(&self, dict: &Dictionary) -> Result<ExecutionRecord, EngineError> {
        Ok(ExecutionRecord {
            query: self.name.clone(),
            exec_instant: self.instant,
            answers: render_answers(&self.answers, dict)?,
            exec_ms: self.exec_ms,
            probe_count: self.probe_count,
            overrun: self.overrun,
        })
    }
}

/// One stream-pattern source: a buffer and the window to view it through.
#[derive(Debug, Clone, Copy)]
struct Source {
    buffer: usize,
    range: WindowRange,
}

#[derive(Debug)]
struct Registered {
    name: String,
    plan: QueryPlan,
    step: u64,
    next_due: u64,
    buffers: Vec<WindowBuffer>,
    /// Per branch, per pattern: the sources a stream pattern may read from
    /// (empty for static patterns).
    sources: Vec<Vec<Vec<Source>>>,
    /// Simulated instant the previous execution finished.
    busy_until: f64,
    /// (finish time, scheduled instant) of executions not yet finished at
    /// the latest tick.
    in_flight: VecDeque<(f64, u64)>,
    covered: Option<u64>,
}

/// Periodic engine: arrivals are only buffered; each query runs at every
/// multiple of its STEP after registration, over the snapshot of its windows.
#[derive(Debug)]
pub struct TimeDrivenEngine {
    dict: Arc<Dictionary>,
    static_graph: Arc<StaticGraph>,
    config: TimeDrivenConfig,
    queries: Vec<Registered>,
    last_tick: Option<u64>,
    /// Timestamp -> number of buffered triples not yet covered.
    backlog: BTreeMap<u64, u64>,
    backlog_len: u64,
}

impl TimeDrivenEngine {
    pub fn new(dict: Arc<Dictionary>, static_graph: Arc<StaticGraph>, config: TimeDrivenConfig) -> Self {
        Self {
            dict,
            static_graph,
            config,
            queries: Vec::new(),
            last_tick: None,
            backlog: BTreeMap::new(),
            backlog_len: 0,
        }
    }

    pub fn dictionary(&self) -> &Arc<Dictionary> {
        &self.dict
    }

    /// Registers `q` with its tick grid anchored at `at`: executions happen
    /// at `at + step`, `at + 2 step`, ...
    pub fn register_query(&mut self, q: &ContinuousQuery, at: u64) -> Result<QueryId, EngineError> {
        let report = capability_check(q, EngineKind::TimeDriven);
        if !report.all_supported() {
            return Err(EngineError::CapabilityRejected {
                engine: EngineKind::TimeDriven,
                features: report.rejected(),
            });
        }
        if !q.has_stream_pattern() {
            return Err(EngineError::AllStatic);
        }
        let mut q = q.clone();
        q.report = ReportPolicy::Rstream;
        let windows = q.stream_windows();
        let step = windows[0].window.step_ms;
        if windows.iter().any(|w| w.window.step_ms != step) {
            return Err(EngineError::MixedSteps);
        }

        // One buffer per stream, sized for the widest window over it.
        let mut buffers: Vec<WindowBuffer> = Vec::new();
        for sw in &windows {
            match buffers.iter_mut().find(|b| b.stream() == sw.stream) {
                Some(b) => {
                    if wider(sw.window.range, b.range()) {
                        *b = WindowBuffer::new(sw.stream, sw.window.range);
                    }
                }
                None => buffers.push(WindowBuffer::new(sw.stream, sw.window.range)),
            }
        }
        buffers.sort_by_key(WindowBuffer::stream);
        let sources = q
            .branches()
            .iter()
            .map(|branch| {
                branch
                    .iter()
                    .map(|p| {
                        q.windows_for(p)
                            .into_iter()
                            .map(|sw| Source {
                                buffer: buffers.iter().position(|b| b.stream() == sw.stream).expect("buffer allocated"),
                                range: sw.window.range,
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let id = QueryId(self.queries.len());
        self.queries.push(Registered {
            name: q.name.clone().unwrap_or_else(|| format!("query{}", id.0)),
            plan: QueryPlan::compile(&q, &self.dict),
            step,
            next_due: at + step,
            buffers,
            sources,
            busy_until: 0.0,
            in_flight: VecDeque::new(),
            covered: None,
        });
        Ok(id)
    }

    /// Number of window buffers a query owns (one per referenced stream).
    pub fn buffer_count(&self, q: QueryId) -> usize {
        self.queries[q.0].buffers.len()
    }

    /// Contents of a query's buffer for `stream`, including elements past
    /// the last execution.
    pub fn buffer_contents(&self, q: QueryId, stream: StreamId) -> Vec<TimestampedTriple> {
        self.queries[q.0]
            .buffers
            .iter()
            .filter(|b| b.stream() == stream)
            .flat_map(|b| b.iter().copied())
            .collect()
    }

    /// Appends to every buffer over `tt.stream`. Returns false when no
    /// query reads that stream (the triple is dropped).
    pub fn push(&mut self, tt: TimestampedTriple) -> Result<bool, EngineError> {
        let mut taken = false;
        for q in &self.queries {
            if let Some(b) = q.buffers.iter().find(|b| b.stream() == tt.stream) {
                if let Some(last) = b.last_t() {
                    if tt.t < last {
                        return Err(crate::algebra::AlgebraError::OutOfOrder {
                            stream: tt.stream,
                            t: tt.t,
                            last,
                        }
                        .into());
                    }
                }
            }
        }
        for q in &mut self.queries {
            for b in q.buffers.iter_mut().filter(|b| b.stream() == tt.stream) {
                b.insert(tt)?;
                taken = true;
            }
        }
        if taken {
            *self.backlog.entry(tt.t).or_default() += 1;
            self.backlog_len += 1;
        }
        Ok(taken)
    }

    /// Triples received whose timestamp no finished execution has covered yet.
    pub fn backlog(&self) -> u64 {
        self.backlog_len
    }

    /// Earliest pending execution instant over all queries.
    pub fn next_due(&self) -> Option<u64> {
        self.queries.iter().map(|q| q.next_due).min()
    }

    /// Runs every execution scheduled in `(previous tick, now]`, in time
    /// order, and returns their results.
    pub fn tick(&mut self, now: u64) -> Result<Vec<ExecutionResult>, EngineError> {
        if let Some(previous) = self.last_tick {
            if now < previous {
                return Err(EngineError::TickBackwards { now, previous });
            }
        }
        self.last_tick = Some(now);
        let mut out = Vec::new();
        loop {
            let due = self
                .queries
                .iter()
                .enumerate()
                .filter(|(_, q)| q.next_due <= now)
                .min_by_key(|(i, q)| (q.next_due, *i))
                .map(|(i, _)| i);
            let Some(i) = due else { break };
            let res = self.execute(i)?;
            out.push(res);
        }
        self.settle(now as f64);
        Ok(out)
    }

    fn execute(&mut self, i: usize) -> Result<ExecutionResult, EngineError> {
        let cost = self.config.cost;
        let q = &mut self.queries[i];
        let instant = q.next_due;
        q.next_due += q.step;
        for b in &mut q.buffers {
            b.prepare(instant);
        }
        let snapshot_triples: usize = q.buffers.iter().map(|b| b.view(instant, b.range()).len()).sum();

        let started = Instant::now();
        let mut probes = 0;
        let answers = evaluate_query(q, instant, &self.static_graph, &self.dict, &mut probes)?;
        let exec_ms = match cost {
            CostModel::Measured { slowdown, repeats } => {
                let mut best = started.elapsed();
                for _ in 1..repeats {
                    let again = Instant::now();
                    let mut ignored = 0;
                    std::hint::black_box(evaluate_query(q, instant, &self.static_graph, &self.dict, &mut ignored)?);
                    best = best.min(again.elapsed());
                }
                best.as_secs_f64() * 1000.0 * slowdown
            }
            CostModel::Synthetic { base_ms, per_triple_ms } => base_ms + per_triple_ms * snapshot_triples as f64,
        };

        let start = q.busy_until.max(instant as f64);
        let finish = start + exec_ms;
        q.busy_until = finish;
        q.in_flight.push_back((finish, instant));
        Ok(ExecutionResult {
            query: QueryId(i),
            name: q.name.clone(),
            instant,
            answers,
            exec_ms,
            probe_count: probes,
            overrun: exec_ms > q.step as f64,
            snapshot_triples,
            lag_ms: finish - instant as f64,
        })
    }

    /// Marks executions finished by `now` as covering their instants and
    /// releases the corresponding backlog.
    fn settle(&mut self, now: f64) {
        for q in &mut self.queries {
            while let Some(&(finish, instant)) = q.in_flight.front() {
                if finish > now {
                    break;
                }
                q.covered = Some(instant);
                q.in_flight.pop_front();
            }
        }
        let Some(covered) = self.queries.iter().map(|q| q.covered).min().flatten() else {
            return;
        };
        while let Some(entry) = self.backlog.first_entry() {
            if *entry.key() > covered {
                break;
            }
            self.backlog_len -= entry.remove();
        }
    }

    /// Feeds a recorded log in order under the virtual clock: every
    /// execution instant `g` runs after all triples stamped `<= g` were
    /// pushed and before any later one. Ends with `tick(until)`.
    pub fn replay(&mut self, log: &[TimestampedTriple], until: u64) -> Result<Vec<ExecutionResult>, EngineError> {
        let mut out = Vec::new();
        for tt in log {
            if self.next_due().is_some_and(|d| d < tt.t) {
                out.extend(self.tick(tt.t - 1)?);
            }
            self.push(*tt)?;
        }
        out.extend(self.tick(until)?);
        Ok(out)
    }

    /// Bytes held by buffers, plans and the shared dictionary and static graph.
    pub fn approx_bytes(&self) -> usize {
        let buffers: usize = self
            .queries
            .iter()
            .flat_map(|q| &q.buffers)
            .map(WindowBuffer::approx_bytes)
            .sum();
        buffers
            + self.backlog.len() * 2 * std::mem::size_of::<u64>()
            + self.dict.approx_bytes()
            + self.static_graph.approx_bytes()
    }
}

fn wider(a: WindowRange, b: WindowRange) -> bool {
    match (a, b) {
        (WindowRange::Unbounded, WindowRange::Unbounded) => false,
        (WindowRange::Unbounded, _) => true,
        (_, WindowRange::Unbounded) => false,
        (WindowRange::Millis(x), WindowRange::Millis(y)) => x > y,
    }
}

/// Evaluates every branch. A stream pattern that may read several streams
/// is tried against each; for every such assignment the patterns are
/// evaluated per stream (ascending stream id), the per-stream results
/// joined, and static patterns and remaining filters applied last.
fn evaluate_query(
    q: &Registered,
    now: u64,
    static_graph: &StaticGraph,
    dict: &Dictionary,
    probes: &mut u64,
) -> Result<AnswerSet, EngineError> {
    let plan = &q.plan;
    let width = plan.width();
    let mut all = BindingTable::new(width, Vec::new());
    for (b, branch) in plan.branches.iter().enumerate() {
        let sources = &q.sources[b];
        let streamed: Vec<usize> = (0..branch.len()).filter(|&i| !branch[i].is_static()).collect();
        let statics: Vec<&CompiledPattern> = branch.iter().filter(|p| p.is_static()).collect();
        let radices: Vec<usize> = streamed.iter().map(|&i| sources[i].len()).collect();
        if radices.contains(&0) {
            continue;
        }
        let mut choice = vec![0usize; streamed.len()];
        loop {
            // Group pattern indices by the stream their chosen source reads.
            let mut groups: BTreeMap<StreamId, Vec<(usize, Source)>> = BTreeMap::new();
            for (k, &i) in streamed.iter().enumerate() {
                let src = sources[i][choice[k]];
                groups
                    .entry(q.buffers[src.buffer].stream())
                    .or_default()
                    .push((i, src));
            }
            let mut joined: Option<BindingTable> = None;
            for members in groups.values() {
                let pats: Vec<&CompiledPattern> = members.iter().map(|(i, _)| &branch[*i]).collect();
                let inputs: Vec<PatternInput<'_>> = members
                    .iter()
                    .map(|(_, s)| PatternInput::Triples(q.buffers[s.buffer].view(now, s.range)))
                    .collect();
                let t = match_bgp(width, None, &pats, &inputs, &plan.filters, false, now, dict, probes)?;
                let next = match joined {
                    None => t,
                    Some(prev) => join_tables(&prev, &t, probes),
                };
                let empty = next.is_empty();
                joined = Some(next);
                if empty {
                    break;
                }
            }
            if joined.as_ref().is_none_or(|t| !t.is_empty()) {
                let inputs = vec![PatternInput::Static(static_graph); statics.len()];
                let rows = match_bgp(width, joined, &statics, &inputs, &plan.filters, true, now, dict, probes)?;
                all.append(&rows);
            }

            // Next assignment, mixed radix.
            let mut k = 0;
            while k < choice.len() {
                choice[k] += 1;
                if choice[k] < radices[k] {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    }
    Ok(finalize(&all, plan, dict)?)
}

/// Drives a [`TimeDrivenEngine`] from the wall clock: a ticker thread wakes at
/// each due instant and sends results to a channel, while producers push
/// concurrently. Stream time `t0` corresponds to the moment of `start`.
pub struct WallClockRunner {
    engine: Arc<Mutex<TimeDrivenEngine>>,
    stop: Arc<AtomicBool>,
    ticker: Option<JoinHandle<Result<(), EngineError>>>,
    origin: Instant,
    t0: u64,
}

impl WallClockRunner {
    pub fn start(engine: TimeDrivenEngine, t0: u64, results: Sender<ExecutionResult>) -> Self {
        let engine = Arc::new(Mutex::new(engine));
        let stop = Arc::new(AtomicBool::new(false));
        let origin = Instant::now();
        let ticker = {
            let engine = Arc::clone(&engine);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || -> Result<(), EngineError> {
                while !stop.load(Ordering::Relaxed) {
                    let due = engine.lock().expect("engine lock").next_due();
                    let Some(due) = due else {
                        std::thread::sleep(Duration::from_millis(5));
                        continue;
                    };
                    let wake = origin + Duration::from_millis(due.saturating_sub(t0));
                    let now = Instant::now();
                    if wake > now {
                        // Short sleeps keep shutdown responsive.
                        std::thread::sleep((wake - now).min(Duration::from_millis(20)));
                        continue;
                    }
                    let stream_now = t0 + origin.elapsed().as_millis() as u64;
                    let out = engine.lock().expect("engine lock").tick(stream_now)?;
                    for r in out {
                        // A gone consumer must not stall the engine.
                        let _ = results.send(r);
                    }
                }
                Ok(())
            })
        };
        Self {
            engine,
            stop,
            ticker: Some(ticker),
            origin,
            t0,
        }
    }

    /// Current stream time.
    pub fn now(&self) -> u64 {
        self.t0 + self.origin.elapsed().as_millis() as u64
    }

    pub fn push(&self, tt: TimestampedTriple) -> Result<bool, EngineError> {
        self.engine.lock().expect("engine lock").push(tt)
    }

    pub fn engine(&self) -> &Arc<Mutex<TimeDrivenEngine>> {
        &self.engine
    }

    /// Stops the ticker and returns the engine.
    pub fn stop(mut self) -> Result<TimeDrivenEngine, EngineError> {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.ticker.take() {
            h.join().expect("ticker thread panicked")?;
        }
        let engine = Arc::try_unwrap(std::mem::replace(
            &mut self.engine,
            Arc::new(Mutex::new(TimeDrivenEngine::new(
                Arc::new(Dictionary::new()),
                Arc::new(StaticGraph::default()),
                TimeDrivenConfig::default(),
            ))),
        ))
        .expect("runner holds the only engine handle");
        Ok(engine.into_inner().expect("engine lock"))
    }
}

impl Drop for WallClockRunner {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.ticker.take() {
            let _ = h.join();
        }
    }
}
