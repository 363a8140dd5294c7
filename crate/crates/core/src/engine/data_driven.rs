use std::collections::VecDeque;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::algebra::{
    eval_filter, group_answer, AlgebraError, Answer, AnswerSet, CompiledPattern, CompiledSelect, QueryPlan, Slot,
    UNBOUND,
};
use crate::query::{capability_check, ContinuousQuery, EngineKind, Feature, ReportPolicy, WindowRange};
use crate::rdf::{Dictionary, StaticGraph, StreamId, TermId, TimestampedTriple};

use super::{render_answers, DeltaRecord, EngineError, QueryId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DataDrivenConfig {
    /// Accept `TIMESTAMP(?v) WITHIN d`, which this engine otherwise rejects.
    pub allow_timestamp_function: bool,
}

/// Answers a query gained through one arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct IstreamDelta {
    pub query: QueryId,
    pub name: String,
    pub trigger: TimestampedTriple,
    pub new_answers: AnswerSet,
    pub probe_count: u64,
}

impl IstreamDelta {
    pub fn record(&self, dict: &Dictionary) -> Result<DeltaRecord, EngineError> {
        Ok(DeltaRecord {
            query: self.name.clone(),
            trigger_t: self.trigger.t,
            new_answers: render_answers(&self.new_answers, dict)?,
            probe_count: self.probe_count,
        })
    }
}

type Key = [TermId; 3];

/// Hash index over a store's entries keyed on some of the pattern's variables.
#[derive(Debug)]
struct Index {
    /// Variable slots forming the key, ascending.
    slots: Vec<usize>,
    /// Triple position (0 = s, 1 = p, 2 = o) holding each key slot.
    positions: Vec<usize>,
    map: FxHashMap<Key, VecDeque<u64>>,
    entries: usize,
}

impl Index {
    fn key_of_triple(&self, tt: &TimestampedTriple) -> Key {
        let ids = [tt.triple.s, tt.triple.p, tt.triple.o];
        let mut k = [UNBOUND; 3];
        for (i, &pos) in self.positions.iter().enumerate() {
            k[i] = ids[pos];
        }
        k
    }

    fn key_of_row(&self, row: &[TermId]) -> Key {
        let mut k = [UNBOUND; 3];
        for (i, &s) in self.slots.iter().enumerate() {
            k[i] = row[s];
        }
        k
    }
}

/// Live triples of one stream that match one pattern.
#[derive(Debug)]
struct Store {
    stream: StreamId,
    range: WindowRange,
    entries: VecDeque<TimestampedTriple>,
    /// Sequence number of `entries[0]`.
    front_seq: u64,
    indexes: Vec<Index>,
}

impl Store {
    fn new(stream: StreamId, range: WindowRange) -> Self {
        Self {
            stream,
            range,
            entries: VecDeque::new(),
            front_seq: 0,
            indexes: Vec::new(),
        }
    }

    fn index_for(&mut self, slots: &[usize], pattern: &CompiledPattern) -> usize {
        if let Some(i) = self.indexes.iter().position(|ix| ix.slots == slots) {
            return i;
        }
        let positions = slots
            .iter()
            .map(|&v| {
                pattern
                    .slots
                    .iter()
                    .position(|s| *s == Slot::Var(v))
                    .expect("key variable occurs in the pattern")
            })
            .collect();
        self.indexes.push(Index {
            slots: slots.to_vec(),
            positions,
            map: FxHashMap::default(),
            entries: 0,
        });
        self.indexes.len() - 1
    }

    fn evict(&mut self, now: u64) {
        while let Some(front) = self.entries.front() {
            if self.range.is_live(front.t, now) {
                break;
            }
            let tt = self.entries.pop_front().expect("front exists");
            for ix in &mut self.indexes {
                let k = ix.key_of_triple(&tt);
                if let Some(bucket) = ix.map.get_mut(&k) {
                    debug_assert_eq!(bucket.front(), Some(&self.front_seq));
                    bucket.pop_front();
                    ix.entries -= 1;
                    if bucket.is_empty() {
                        ix.map.remove(&k);
                    }
                }
            }
            self.front_seq += 1;
        }
    }

    fn insert(&mut self, tt: TimestampedTriple) {
        let seq = self.front_seq + self.entries.len() as u64;
        for ix in &mut self.indexes {
            ix.map.entry(ix.key_of_triple(&tt)).or_default().push_back(seq);
            ix.entries += 1;
        }
        self.entries.push_back(tt);
    }

    fn get(&self, seq: u64) -> &TimestampedTriple {
        &self.entries[(seq - self.front_seq) as usize]
    }

    fn approx_bytes(&self) -> usize {
        let entry = std::mem::size_of::<TimestampedTriple>();
        let index: usize = self
            .indexes
            .iter()
            .map(|ix| ix.map.len() * (std::mem::size_of::<Key>() + 48) + ix.entries * 8)
            .sum();
        self.entries.len() * entry + index
    }
}

#[derive(Debug)]
struct Node {
    pattern: CompiledPattern,
    /// One store per stream the pattern reads; empty for static patterns.
    stores: Vec<Store>,
}

/// Probe step: which pattern to visit and the index to use in each of its
/// stores (`None` scans every entry, or marks a static lookup).
#[derive(Debug, Clone)]
struct Step {
    node: usize,
    index: Option<usize>,
}

#[derive(Debug)]
struct Branch {
    nodes: Vec<Node>,
    /// Probe sequence for an arrival matching node `i` (`None` for static nodes).
    sequences: Vec<Option<Vec<Step>>>,
}

#[derive(Debug)]
struct Registered {
    name: String,
    plan: QueryPlan,
    branches: Vec<Branch>,
    emitted: FxHashSet<Answer>,
    /// Live complete bindings per group, with the instant each expires.
    groups: FxHashMap<Vec<TermId>, FxHashMap<Vec<TermId>, u64>>,
    group_rows: usize,
}

/// Eager engine: every arrival is inserted into the stores of the patterns
/// it matches and then probes the other patterns of the query for
/// completions. Only answers never emitted before are reported.
///
/// Arrivals are processed one at a time; the caller's arrival order defines
/// the interleaving of several streams.
#[derive(Debug)]
pub struct DataDrivenEngine {
    dict: Arc<Dictionary>,
    static_graph: Arc<StaticGraph>,
    config: DataDrivenConfig,
    queries: Vec<Registered>,
    last_t: FxHashMap<StreamId, u64>,
    total_probes: u64,
}

/// Probe order starting at `start`: then, repeatedly, the first remaining
/// pattern (in registration order) sharing a bound variable, or the first
/// remaining one when none does.
fn probe_order(patterns: &[CompiledPattern], start: usize) -> Vec<(usize, Vec<usize>)> {
    let mut bound: Vec<usize> = patterns[start].vars();
    let mut remaining: Vec<usize> = (0..patterns.len()).filter(|&i| i != start).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let pick = remaining
            .iter()
            .position(|&j| patterns[j].vars().iter().any(|v| bound.contains(v)))
            .unwrap_or(0);
        let j = remaining.remove(pick);
        let key: Vec<usize> = patterns[j].vars().into_iter().filter(|v| bound.contains(v)).collect();
        for v in patterns[j].vars() {
            if !bound.contains(&v) {
                bound.push(v);
            }
        }
        out.push((j, key));
    }
    out
}

impl DataDrivenEngine {
    pub fn new(dict: Arc<Dictionary>, static_graph: Arc<StaticGraph>, config: DataDrivenConfig) -> Self {
        Self {
            dict,
            static_graph,
            config,
            queries: Vec::new(),
            last_t: FxHashMap::default(),
            total_probes: 0,
        }
    }

    pub fn dictionary(&self) -> &Arc<Dictionary> {
        &self.dict
    }

    pub fn register_query(&mut self, q: &ContinuousQuery) -> Result<QueryId, EngineError> {
        let report = capability_check(q, EngineKind::DataDriven);
        let rejected: Vec<Feature> = report
            .rejected()
            .into_iter()
            .filter(|f| !(*f == Feature::TimestampFunction && self.config.allow_timestamp_function))
            .collect();
        if !rejected.is_empty() {
            return Err(EngineError::CapabilityRejected {
                engine: EngineKind::DataDriven,
                features: rejected,
            });
        }
        if !q.has_stream_pattern() {
            return Err(EngineError::AllStatic);
        }
        let mut q = q.clone();
        q.report = ReportPolicy::Istream;
        let plan = QueryPlan::compile(&q, &self.dict);
        let branches = q
            .branches()
            .iter()
            .zip(&plan.branches)
            .map(|(ast, compiled)| {
                let mut nodes: Vec<Node> = ast
                    .iter()
                    .zip(compiled)
                    .map(|(p, c)| Node {
                        pattern: c.clone(),
                        stores: q
                            .windows_for(p)
                            .into_iter()
                            .map(|sw| Store::new(sw.stream, sw.window.range))
                            .collect(),
                    })
                    .collect();
                let sequences = (0..nodes.len())
                    .map(|i| {
                        if compiled[i].is_static() {
                            return None;
                        }
                        let steps = probe_order(compiled, i)
                            .into_iter()
                            .map(|(j, key)| {
                                let node = &mut nodes[j];
                                let index = if node.pattern.is_static() || key.is_empty() {
                                    None
                                } else {
                                    let pattern = node.pattern.clone();
                                    let ids: Vec<usize> =
                                        node.stores.iter_mut().map(|s| s.index_for(&key, &pattern)).collect();
                                    // Stores of one node register the same key sets in the same order.
                                    debug_assert!(ids.windows(2).all(|w| w[0] == w[1]));
                                    ids.first().copied()
                                };
                                Step { node: j, index }
                            })
                            .collect();
                        Some(steps)
                    })
                    .collect();
                Branch { nodes, sequences }
            })
            .collect();
        let id = QueryId(self.queries.len());
        self.queries.push(Registered {
            name: q.name.clone().unwrap_or_else(|| format!("query{}", id.0)),
            plan,
            branches,
            emitted: FxHashSet::default(),
            groups: FxHashMap::default(),
            group_rows: 0,
        });
        Ok(id)
    }

    /// Join keys of every index of a query, as (pattern position in its
    /// branch, key variable names), over all branches.
    pub fn index_keys(&self, q: QueryId) -> Vec<(usize, Vec<String>)> {
        let r = &self.queries[q.0];
        let mut out = Vec::new();
        for b in &r.branches {
            for (i, n) in b.nodes.iter().enumerate() {
                if let Some(store) = n.stores.first() {
                    for ix in &store.indexes {
                        out.push((i, ix.slots.iter().map(|&s| r.plan.vars[s].0.clone()).collect()));
                    }
                }
            }
        }
        out
    }

    pub fn total_probes(&self) -> u64 {
        self.total_probes
    }

    /// Processes one arrival and returns one delta per query reading its stream.
    pub fn on_arrival(&mut self, tt: TimestampedTriple) -> Result<Vec<IstreamDelta>, EngineError> {
        if let Some(&last) = self.last_t.get(&tt.stream) {
            if tt.t < last {
                return Err(AlgebraError::OutOfOrder {
                    stream: tt.stream,
                    t: tt.t,
                    last,
                }
                .into());
            }
        }
        self.last_t.insert(tt.stream, tt.t);
        let mut out = Vec::new();
        for (qi, q) in self.queries.iter_mut().enumerate() {
            let reads = q
                .branches
                .iter()
                .flat_map(|b| &b.nodes)
                .any(|n| n.stores.iter().any(|s| s.stream == tt.stream));
            if !reads {
                continue;
            }
            let mut probes = 0;
            let new_answers = process(q, tt, &self.static_graph, &self.dict, &mut probes)?;
            self.total_probes += probes;
            out.push(IstreamDelta {
                query: QueryId(qi),
                name: q.name.clone(),
                trigger: tt,
                new_answers,
                probe_count: probes,
            });
        }
        Ok(out)
    }

    /// Processes a recorded log in order and collects every delta.
    pub fn replay(&mut self, log: &[TimestampedTriple]) -> Result<Vec<IstreamDelta>, EngineError> {
        let mut out = Vec::new();
        for tt in log {
            out.extend(self.on_arrival(*tt)?);
        }
        Ok(out)
    }

    /// Number of distinct answers emitted so far.
    pub fn emitted_count(&self, q: QueryId) -> usize {
        self.queries[q.0].emitted.len()
    }

    /// Bytes held by stores, indexes, emitted answers, aggregate state and the
    /// shared dictionary and static graph.
    pub fn approx_bytes(&self) -> usize {
        let mut total = self.dict.approx_bytes() + self.static_graph.approx_bytes();
        for q in &self.queries {
            let row = q.plan.width() * std::mem::size_of::<TermId>() + 32;
            let answer = q.plan.select.len() * std::mem::size_of::<TermId>() + 32;
            total += q.emitted.len() * answer + q.group_rows * (row + 8);
            for b in &q.branches {
                for n in &b.nodes {
                    total += n.stores.iter().map(Store::approx_bytes).sum::<usize>();
                }
            }
        }
        total
    }
}

/// A partial binding and the instant it stops being derivable.
struct Partial {
    row: Vec<TermId>,
    expiry: u64,
}

fn process(
    q: &mut Registered,
    tt: TimestampedTriple,
    static_graph: &StaticGraph,
    dict: &Dictionary,
    probes: &mut u64,
) -> Result<AnswerSet, EngineError> {
    let now = tt.t;
    let width = q.plan.width();
    let mut completed: Vec<Partial> = Vec::new();

    for branch in &mut q.branches {
        // Insert into every matching store first, so a triple matching two
        // patterns can join with itself.
        let mut matched = Vec::new();
        for (i, node) in branch.nodes.iter_mut().enumerate() {
            if node.pattern.is_static() {
                continue;
            }
            *probes += 1;
            if !node.pattern.accepts(&tt.triple) {
                continue;
            }
            for store in node.stores.iter_mut().filter(|s| s.stream == tt.stream) {
                store.evict(now);
                if store.range.contains(tt.t, now) {
                    store.insert(tt);
                    matched.push((i, store.range));
                }
            }
        }
        for (i, range) in matched {
            let node = &branch.nodes[i];
            let mut row = vec![UNBOUND; width];
            if !node.pattern.bind(&tt.triple, &mut row) || !within_ok(&node.pattern, tt.t, now) {
                continue;
            }
            let mut frontier = vec![Partial {
                row,
                expiry: range.expiry(tt.t),
            }];
            let steps = branch.sequences[i].as_ref().expect("stream node has a sequence");
            for step in steps {
                frontier = probe_step(&mut branch.nodes[step.node], step.index, frontier, now, static_graph, probes);
                if frontier.is_empty() {
                    break;
                }
            }
            completed.extend(frontier);
        }
    }

    let mut new_answers = AnswerSet::new();
    let mut keep = Vec::with_capacity(completed.len());
    for p in completed {
        let mut pass = true;
        for f in &q.plan.filters {
            if eval_filter(f, &p.row, &|_| 0, dict)? != Some(true) {
                pass = false;
                break;
            }
        }
        if pass {
            keep.push(p);
        }
    }

    match &q.plan.group_by {
        None => {
            for p in keep {
                let answer: Answer = q
                    .plan
                    .select
                    .iter()
                    .map(|s| match s {
                        CompiledSelect::Var(v) => p.row[*v],
                        CompiledSelect::Count(_) => unreachable!("aggregates require GROUP BY"),
                    })
                    .collect();
                if !answer.contains(&UNBOUND) && q.emitted.insert(answer.clone()) {
                    new_answers.insert(answer);
                }
            }
        }
        Some(keys) => {
            let mut touched: Vec<Vec<TermId>> = Vec::new();
            for p in keep {
                let key: Vec<TermId> = keys.iter().map(|&k| p.row[k]).collect();
                if key.contains(&UNBOUND) {
                    continue;
                }
                let rows = q.groups.entry(key.clone()).or_default();
                let before = rows.len();
                let e = rows.entry(p.row).or_insert(p.expiry);
                *e = (*e).max(p.expiry);
                q.group_rows += rows.len() - before;
                if !touched.contains(&key) {
                    touched.push(key);
                }
            }
            for key in touched {
                let rows = q.groups.get_mut(&key).expect("touched group exists");
                let before = rows.len();
                rows.retain(|_, exp| *exp > now);
                q.group_rows -= before - rows.len();
                let counts: Vec<usize> = q
                    .plan
                    .counted
                    .iter()
                    .map(|&slot| rows.keys().filter(|r| r[slot] != UNBOUND).count())
                    .collect();
                if let Some(answer) = group_answer(&key, &counts, &q.plan, dict)? {
                    if q.emitted.insert(answer.clone()) {
                        new_answers.insert(answer);
                    }
                }
            }
        }
    }
    Ok(new_answers)
}

fn within_ok(p: &CompiledPattern, t: u64, now: u64) -> bool {
    p.within.is_none_or(|d| t.saturating_add(d) > now)
}

fn probe_step(
    node: &mut Node,
    index: Option<usize>,
    frontier: Vec<Partial>,
    now: u64,
    static_graph: &StaticGraph,
    probes: &mut u64,
) -> Vec<Partial> {
    let mut out = Vec::new();
    if node.pattern.is_static() {
        for p in frontier {
            *probes += 1;
            let [s, pr, o] = node.pattern.lookup_key(&p.row);
            for t in static_graph.lookup(s, pr, o) {
                *probes += 1;
                let mut row = p.row.clone();
                if node.pattern.bind(&t, &mut row) {
                    out.push(Partial { row, expiry: p.expiry });
                }
            }
        }
        return out;
    }
    for store in &mut node.stores {
        store.evict(now);
    }
    let pattern = &node.pattern;
    for p in &frontier {
        for store in &node.stores {
            let visit = |tt: &TimestampedTriple, out: &mut Vec<Partial>, probes: &mut u64| {
                *probes += 1;
                if !store.range.contains(tt.t, now) || !within_ok(pattern, tt.t, now) {
                    return;
                }
                let mut row = p.row.clone();
                if pattern.bind(&tt.triple, &mut row) {
                    out.push(Partial {
                        row,
                        expiry: p.expiry.min(store.range.expiry(tt.t)),
                    });
                }
            };
            match index {
                Some(ix) => {
                    *probes += 1;
                    let index = &store.indexes[ix];
                    if let Some(bucket) = index.map.get(&index.key_of_row(&p.row)) {
                        for &seq in bucket {
                            visit(store.get(seq), &mut out, probes);
                        }
                    }
                }
                None => {
                    for tt in &store.entries {
                        visit(tt, &mut out, probes);
                    }
                }
            }
        }
    }
    out
}
