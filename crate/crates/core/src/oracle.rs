//! Brute-force reference evaluation over a complete stream log.
//!
//! Everything here is re-derived from the query AST: per-pattern window
//! filtering of the whole log, backtracking nested-loop matching, then
//! filters, grouping and projection. Nothing is shared with the engines'
//! algebra beyond the RDF types, so agreement between the two is evidence
//! rather than tautology.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::engine::OutputRecord;
use crate::query::{
    CompareOp, ContinuousQuery, FilterExpr, Operand, PatternSource, PatternTerm, SelectItem, TemporalBound,
    TriplePattern, Variable, WindowRange,
};
use crate::rdf::{Dictionary, RdfError, StaticGraph, Term, TermId, TimestampedTriple};

/// Largest log the oracle accepts.
pub const ORACLE_CAP: usize = 50_000;

/// Answers in select-list order, as terms.
pub type TermAnswer = Vec<Term>;
pub type TermAnswerSet = BTreeSet<TermAnswer>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("log of {len} triples exceeds the oracle cap of {cap}")]
    TooLarge { len: usize, cap: usize },
    #[error("type error: {0}")]
    Type(String),
    #[error("cannot align engine output with oracle instants: {0}")]
    Alignment(String),
    #[error("unreadable engine output: {0}")]
    Output(String),
    #[error(transparent)]
    Rdf(#[from] RdfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Exact,
    Mismatch,
}

/// Outcome of comparing engine output with the oracle. Differences carry the
/// instant they were found at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleVerdict {
    pub query: String,
    pub instants: Vec<u64>,
    pub missing: BTreeSet<(u64, TermAnswer)>,
    pub spurious: BTreeSet<(u64, TermAnswer)>,
    pub verdict: Verdict,
}

impl OracleVerdict {
    fn new(query: &str) -> Self {
        Self {
            query: query.to_string(),
            instants: Vec::new(),
            missing: BTreeSet::new(),
            spurious: BTreeSet::new(),
            verdict: Verdict::Exact,
        }
    }

    fn add(&mut self, instant: u64, engine: &TermAnswerSet, oracle: &TermAnswerSet) {
        self.instants.push(instant);
        self.missing
            .extend(oracle.difference(engine).map(|a| (instant, a.clone())));
        self.spurious
            .extend(engine.difference(oracle).map(|a| (instant, a.clone())));
        self.verdict = if self.missing.is_empty() && self.spurious.is_empty() {
            Verdict::Exact
        } else {
            Verdict::Mismatch
        };
    }

    pub fn is_exact(&self) -> bool {
        self.verdict == Verdict::Exact
    }
}

/// Compares one engine set with one oracle set.
pub fn diff(query: &str, instant: u64, engine: &TermAnswerSet, oracle: &TermAnswerSet) -> OracleVerdict {
    let mut v = OracleVerdict::new(query);
    v.add(instant, engine, oracle);
    v
}

struct Entry {
    ids: [TermId; 3],
    t: u64,
    stream: crate::rdf::StreamId,
}

/// A log resolved once and evaluated at any number of instants.
pub struct Oracle<'a> {
    dict: &'a Dictionary,
    entries: Vec<Entry>,
    statics: Vec<[TermId; 3]>,
    last_t: Option<u64>,
}

impl<'a> Oracle<'a> {
    pub fn new(log: &[TimestampedTriple], dict: &'a Dictionary, static_graph: &StaticGraph) -> Result<Self, OracleError> {
        if log.len() > ORACLE_CAP {
            return Err(OracleError::TooLarge {
                len: log.len(),
                cap: ORACLE_CAP,
            });
        }
        Ok(Self {
            dict,
            entries: log
                .iter()
                .map(|tt| Entry {
                    ids: [tt.triple.s, tt.triple.p, tt.triple.o],
                    t: tt.t,
                    stream: tt.stream,
                })
                .collect(),
            statics: static_graph.triples().iter().map(|t| [t.s, t.p, t.o]).collect(),
            last_t: log.iter().map(|tt| tt.t).max(),
        })
    }

    /// Answers of `q` over the windows as they stand at `instant`.
    pub fn eval(&self, q: &ContinuousQuery, instant: u64) -> Result<TermAnswerSet, OracleError> {
        let vars: Vec<Variable> = {
            let mut v: Vec<Variable> = Vec::new();
            for p in q.all_patterns() {
                for x in p.variables() {
                    if !v.contains(x) {
                        v.push(x.clone());
                    }
                }
            }
            v
        };
        let pos = |v: &Variable| vars.iter().position(|x| x == v).expect("pattern variable");

        let mut solutions: BTreeSet<Vec<Option<TermId>>> = BTreeSet::new();
        for branch in q.branches() {
            // Triples each pattern may match: window membership and constants.
            let mut candidates: Vec<Vec<(&[TermId; 3], Option<u64>)>> = Vec::new();
            let mut unmatched = false;
            for p in &branch {
                let Some(consts) = self.constants(p) else {
                    unmatched = true;
                    break;
                };
                let fits = |ids: &[TermId; 3]| (0..3).all(|i| consts[i].is_none_or(|c| c == ids[i]));
                let list: Vec<(&[TermId; 3], Option<u64>)> = match &p.source {
                    PatternSource::Static => self.statics.iter().filter(|ids| fits(ids)).map(|ids| (ids, None)).collect(),
                    _ => {
                        let windows = q.windows_for(p);
                        self.entries
                            .iter()
                            .filter(|e| {
                                windows
                                    .iter()
                                    .any(|w| w.stream == e.stream && w.window.range.contains(e.t, instant))
                            })
                            .filter(|e| fits(&e.ids))
                            .map(|e| (&e.ids, Some(e.t)))
                            .collect()
                    }
                };
                candidates.push(list);
            }
            if unmatched {
                continue;
            }
            // Pattern whose matched triple carries the temporal bound, if any.
            let temporal = q.temporal_filter.as_ref().and_then(|tf| match tf.within {
                TemporalBound::Window => None,
                TemporalBound::Millis(d) => branch
                    .iter()
                    .position(|p| !p.is_static() && p.variables().any(|v| *v == tf.var))
                    .map(|i| (i, d)),
            });
            let slots: Vec<[Option<usize>; 3]> = branch
                .iter()
                .map(|p| p.terms().map(|t| t.var().map(&pos)))
                .collect();
            let mut binding = vec![None; vars.len()];
            self.search(0, &slots, &candidates, temporal, instant, &mut binding, &mut |b| {
                solutions.insert(b.to_vec());
            });
        }

        // Filters over complete solutions.
        let mut kept = Vec::new();
        for s in solutions {
            let mut ok = true;
            for f in &q.filters {
                if self.filter(f, &s, &vars, &BTreeMap::new())? != Some(true) {
                    ok = false;
                    break;
                }
            }
            if ok {
                kept.push(s);
            }
        }

        let mut out = TermAnswerSet::new();
        match &q.group_by {
            None => {
                for s in kept {
                    let mut answer = Vec::new();
                    for item in &q.select {
                        match item {
                            SelectItem::Var(v) => match s[pos(v)] {
                                Some(id) => answer.push((*self.dict.resolve(id)?).clone()),
                                None => break,
                            },
                            SelectItem::Count { .. } => unreachable!("validated: COUNT needs GROUP BY"),
                        }
                    }
                    if answer.len() == q.select.len() {
                        out.insert(answer);
                    }
                }
            }
            Some(keys) => {
                let mut groups: BTreeMap<Vec<TermId>, Vec<Vec<Option<TermId>>>> = BTreeMap::new();
                for s in kept {
                    let key: Option<Vec<TermId>> = keys.iter().map(|k| s[pos(k)]).collect();
                    if let Some(key) = key {
                        groups.entry(key).or_default().push(s);
                    }
                }
                for (key, members) in groups {
                    let mut counts: BTreeMap<Variable, i64> = BTreeMap::new();
                    for v in &vars {
                        let n = members.iter().filter(|m| m[pos(v)].is_some()).count();
                        counts.insert(v.clone(), n as i64);
                    }
                    let mut row = vec![None; vars.len()];
                    for (k, id) in keys.iter().zip(&key) {
                        row[pos(k)] = Some(*id);
                    }
                    if let Some(h) = &q.having {
                        if self.filter(h, &row, &vars, &counts)? != Some(true) {
                            continue;
                        }
                    }
                    let mut answer = Vec::new();
                    for item in &q.select {
                        answer.push(match item {
                            SelectItem::Var(v) => (*self.dict.resolve(row[pos(v)].expect("grouped"))?).clone(),
                            SelectItem::Count { var, .. } => Term::integer(counts[var]),
                        });
                    }
                    out.insert(answer);
                }
            }
        }
        Ok(out)
    }

    /// Answers over the whole log with every window unbounded.
    pub fn eval_landmark(&self, q: &ContinuousQuery) -> Result<TermAnswerSet, OracleError> {
        match self.last_t {
            None => Ok(TermAnswerSet::new()),
            Some(t) => self.eval(&q.landmark(), t),
        }
    }

    /// Union of the answers at every arrival instant of the log: everything
    /// an eager engine with these windows could ever derive.
    pub fn eval_arrivals(&self, q: &ContinuousQuery) -> Result<TermAnswerSet, OracleError> {
        let instants: BTreeSet<u64> = self.entries.iter().map(|e| e.t).collect();
        let mut all = TermAnswerSet::new();
        for t in instants {
            all.extend(self.eval(q, t)?);
        }
        Ok(all)
    }

    /// Constant ids of a pattern; `None` when a constant never occurs in the
    /// dictionary (so nothing can match).
    fn constants(&self, p: &TriplePattern) -> Option<[Option<TermId>; 3]> {
        let mut out = [None; 3];
        for (i, t) in p.terms().into_iter().enumerate() {
            if let PatternTerm::Const(c) = t {
                out[i] = Some(self.dict.lookup(c)?);
            }
        }
        Some(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        i: usize,
        slots: &[[Option<usize>; 3]],
        candidates: &[Vec<(&[TermId; 3], Option<u64>)>],
        temporal: Option<(usize, u64)>,
        instant: u64,
        binding: &mut Vec<Option<TermId>>,
        emit: &mut dyn FnMut(&[Option<TermId>]),
    ) {
        if i == slots.len() {
            emit(binding);
            return;
        }
        for (ids, t) in &candidates[i] {
            if let (Some((ti, d)), Some(t)) = (temporal, t) {
                if ti == i && t + d <= instant {
                    continue;
                }
            }
            let mut fresh = [usize::MAX; 3];
            let mut ok = true;
            for k in 0..3 {
                if let Some(v) = slots[i][k] {
                    match binding[v] {
                        None => {
                            binding[v] = Some(ids[k]);
                            fresh[k] = v;
                        }
                        Some(b) if b == ids[k] => {}
                        Some(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            if ok {
                self.search(i + 1, slots, candidates, temporal, instant, binding, emit);
            }
            for v in fresh.into_iter().filter(|&v| v != usize::MAX) {
                binding[v] = None;
            }
        }
    }

    fn value(&self, o: &Operand, row: &[Option<TermId>], vars: &[Variable], counts: &BTreeMap<Variable, i64>) -> Result<Option<Term>, OracleError> {
        Ok(match o {
            Operand::Const(t) => Some(t.clone()),
            Operand::Var(v) => match vars.iter().position(|x| x == v).and_then(|i| row[i]) {
                Some(id) => Some((*self.dict.resolve(id)?).clone()),
                None => None,
            },
            Operand::Count(v) => Some(Term::integer(counts.get(v).copied().unwrap_or(0))),
        })
    }

    fn filter(
        &self,
        f: &FilterExpr,
        row: &[Option<TermId>],
        vars: &[Variable],
        counts: &BTreeMap<Variable, i64>,
    ) -> Result<Option<bool>, OracleError> {
        Ok(match f {
            FilterExpr::Not(a) => self.filter(a, row, vars, counts)?.map(|b| !b),
            FilterExpr::Or(a, b) => {
                let x = self.filter(a, row, vars, counts)?;
                let y = self.filter(b, row, vars, counts)?;
                if x == Some(true) || y == Some(true) {
                    Some(true)
                } else if x.is_none() || y.is_none() {
                    None
                } else {
                    Some(false)
                }
            }
            FilterExpr::And(a, b) => {
                let x = self.filter(a, row, vars, counts)?;
                let y = self.filter(b, row, vars, counts)?;
                if x == Some(false) || y == Some(false) {
                    Some(false)
                } else if x.is_none() || y.is_none() {
                    None
                } else {
                    Some(true)
                }
            }
            FilterExpr::StrEndsWith(o, suffix) => match self.value(o, row, vars, counts)? {
                None => None,
                Some(t) => match t.as_str_literal() {
                    Some(s) => Some(s.ends_with(suffix.as_str())),
                    None => return Err(OracleError::Type(format!("strEndsWith on {t}"))),
                },
            },
            FilterExpr::Compare(op, a, b) => {
                let (Some(x), Some(y)) = (self.value(a, row, vars, counts)?, self.value(b, row, vars, counts)?) else {
                    return Ok(None);
                };
                match (x.as_number(), y.as_number()) {
                    (Some(p), Some(q)) => Some(match op {
                        CompareOp::Eq => p == q,
                        CompareOp::Lt => p < q,
                        CompareOp::Gt => p > q,
                    }),
                    _ if *op == CompareOp::Eq => Some(x == y),
                    _ => return Err(OracleError::Type(format!("cannot order {x} and {y}"))),
                }
            }
        })
    }
}

/// Single-shot evaluation.
pub fn oracle_eval(
    log: &[TimestampedTriple],
    q: &ContinuousQuery,
    instant: u64,
    dict: &Dictionary,
    static_graph: &StaticGraph,
) -> Result<TermAnswerSet, OracleError> {
    Oracle::new(log, dict, static_graph)?.eval(q, instant)
}

/// Checks per-instant engine output (Rstream) against the oracle.
/// Instants must be strictly increasing.
pub fn diff_per_instant(
    oracle: &Oracle<'_>,
    q: &ContinuousQuery,
    query_name: &str,
    outputs: &[(u64, TermAnswerSet)],
) -> Result<OracleVerdict, OracleError> {
    let mut v = OracleVerdict::new(query_name);
    let mut prev: Option<u64> = None;
    for (instant, answers) in outputs {
        if prev.is_some_and(|p| p >= *instant) {
            return Err(OracleError::Alignment(format!(
                "instant {instant} does not follow {}",
                prev.unwrap_or_default()
            )));
        }
        prev = Some(*instant);
        v.add(*instant, answers, &oracle.eval(q, *instant)?);
    }
    Ok(v)
}

/// Checks accumulated deltas (Istream with unbounded windows) against the
/// oracle's answers over the whole log.
pub fn diff_accumulated(
    oracle: &Oracle<'_>,
    q: &ContinuousQuery,
    query_name: &str,
    union: &TermAnswerSet,
) -> Result<OracleVerdict, OracleError> {
    let expected = oracle.eval_landmark(q)?;
    Ok(diff(query_name, oracle.last_t.unwrap_or(0), union, &expected))
}

/// Reads rendered answers (N-Triples terms) back into terms.
pub fn parse_answers(rows: &[Vec<String>]) -> Result<TermAnswerSet, OracleError> {
    rows.iter()
        .map(|row| {
            row.iter()
                .map(|t| crate::rdf::ntriples::parse_term(t).map_err(|e| OracleError::Output(format!("{t:?}: {e}"))))
                .collect()
        })
        .collect()
}

/// Checks recorded engine output for the query named `name`. Execution
/// records are compared instant by instant. Delta records are accumulated
/// and compared with the landmark answers when every window is unbounded,
/// otherwise with [`Oracle::eval_arrivals`].
pub fn verify_output(
    oracle: &Oracle<'_>,
    q: &ContinuousQuery,
    name: &str,
    records: &[OutputRecord],
) -> Result<OracleVerdict, OracleError> {
    let mine: Vec<&OutputRecord> = records
        .iter()
        .filter(|r| match r {
            OutputRecord::Execution(e) => e.query == name,
            OutputRecord::Delta(d) => d.query == name,
        })
        .collect();
    let executions: Vec<_> = mine
        .iter()
        .filter_map(|r| match r {
            OutputRecord::Execution(e) => Some(e),
            OutputRecord::Delta(_) => None,
        })
        .collect();
    if !executions.is_empty() {
        if executions.len() != mine.len() {
            return Err(OracleError::Alignment("output mixes executions and deltas".into()));
        }
        let outputs = executions
            .iter()
            .map(|e| Ok((e.exec_instant, parse_answers(&e.answers)?)))
            .collect::<Result<Vec<_>, OracleError>>()?;
        let mut v = diff_per_instant(oracle, q, name, &outputs)?;
        // An execution absent between two reported ones loses its answers.
        let step = q.stream_windows().iter().map(|w| w.window.step_ms).min().unwrap_or(0);
        if step > 0 {
            let reported: std::collections::BTreeSet<u64> = outputs.iter().map(|(t, _)| *t).collect();
            let (first, last) = (outputs[0].0, outputs[outputs.len() - 1].0);
            let mut t = first;
            while t < last {
                if !reported.contains(&t) {
                    v.add(t, &TermAnswerSet::new(), &oracle.eval(q, t)?);
                }
                t += step;
            }
        }
        return Ok(v);
    }
    let mut union = TermAnswerSet::new();
    for r in &mine {
        if let OutputRecord::Delta(d) = r {
            union.extend(parse_answers(&d.new_answers)?);
        }
    }
    let unbounded = q.stream_windows().iter().all(|w| w.window.range == WindowRange::Unbounded);
    if unbounded {
        diff_accumulated(oracle, q, name, &union)
    } else {
        let expected = oracle.eval_arrivals(q)?;
        Ok(diff(name, oracle.last_t.unwrap_or(0), &union, &expected))
    }
}

/// Converts id-level answers to terms.
pub fn to_terms(answers: &crate::algebra::AnswerSet, dict: &Dictionary) -> Result<TermAnswerSet, RdfError> {
    answers
        .iter()
        .map(|a| a.iter().map(|&id| dict.resolve(id).map(|t| (*t).clone())).collect())
        .collect()
}
