use std::collections::BTreeSet;

use crate::rdf::{StreamId, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(pub String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Variable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "?{}", self.0)
    }
}

/// Extent of a time-based window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowRange {
    Millis(u64),
    /// Landmark window: nothing ever leaves it.
    Unbounded,
}

impl WindowRange {
    /// Half-open membership: `now - range < t <= now`.
    pub fn contains(self, t: u64, now: u64) -> bool {
        t <= now && self.is_live(t, now)
    }

    /// Whether an element at `t` has not yet slid out at `now`.
    pub fn is_live(self, t: u64, now: u64) -> bool {
        match self {
            WindowRange::Millis(r) => t.saturating_add(r) > now,
            WindowRange::Unbounded => true,
        }
    }

    /// Instant at which an element stamped `t` leaves the window.
    pub fn expiry(self, t: u64) -> u64 {
        match self {
            WindowRange::Millis(r) => t.saturating_add(r),
            WindowRange::Unbounded => u64::MAX,
        }
    }

    pub fn millis(self) -> Option<u64> {
        match self {
            WindowRange::Millis(r) => Some(r),
            WindowRange::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowSpec {
    pub range: WindowRange,
    /// Execution period; only the time-driven engine uses it.
    pub step_ms: u64,
}

impl WindowSpec {
    pub fn new(range_ms: u64, step_ms: u64) -> Self {
        Self {
            range: WindowRange::Millis(range_ms),
            step_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamWindow {
    pub stream: StreamId,
    pub window: WindowSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(Variable),
    Const(Term),
}

impl PatternTerm {
    pub fn var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Const(_) => None,
        }
    }
}

/// Where a pattern's triples come from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternSource {
    /// Scoped to one stream with its own window (`STREAM <iri> [...] { }`).
    Stream(StreamWindow),
    /// Matched against every `FROM STREAM` window of the query.
    DefaultStreams,
    /// Matched against the static graph (`STATIC { }`).
    Static,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub s: PatternTerm,
    pub p: PatternTerm,
    pub o: PatternTerm,
    pub source: PatternSource,
}

impl TriplePattern {
    pub fn terms(&self) -> [&PatternTerm; 3] {
        [&self.s, &self.p, &self.o]
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.terms().into_iter().filter_map(PatternTerm::var)
    }

    pub fn is_static(&self) -> bool {
        matches!(self.source, PatternSource::Static)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportPolicy {
    Rstream,
    Istream,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SelectItem {
    Var(Variable),
    Count { var: Variable, alias: Variable },
}

impl SelectItem {
    /// Name of the output column.
    pub fn output(&self) -> &Variable {
        match self {
            SelectItem::Var(v) => v,
            SelectItem::Count { alias, .. } => alias,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Lt,
    Gt,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Var(Variable),
    Const(Term),
    /// `COUNT(?v)`; only meaningful in HAVING.
    Count(Variable),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FilterExpr {
    Or(Box<FilterExpr>, Box<FilterExpr>),
    And(Box<FilterExpr>, Box<FilterExpr>),
    Not(Box<FilterExpr>),
    StrEndsWith(Operand, String),
    Compare(CompareOp, Operand, Operand),
}

impl FilterExpr {
    pub fn operands(&self) -> Vec<&Operand> {
        match self {
            FilterExpr::Or(a, b) | FilterExpr::And(a, b) => {
                let mut v = a.operands();
                v.extend(b.operands());
                v
            }
            FilterExpr::Not(a) => a.operands(),
            FilterExpr::StrEndsWith(o, _) => vec![o],
            FilterExpr::Compare(_, a, b) => vec![a, b],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemporalBound {
    /// The window range of the pattern that binds the variable.
    Window,
    Millis(u64),
}

/// `TIMESTAMP(?v) WITHIN d`: the triple that bound `?v` (through the first
/// stream pattern mentioning it) arrived within the last `d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TemporalFilter {
    pub var: Variable,
    pub within: TemporalBound,
}

/// A parsed and validated continuous query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuousQuery {
    pub name: Option<String>,
    pub prefixes: Vec<(String, String)>,
    pub report: ReportPolicy,
    pub select: Vec<SelectItem>,
    pub from_streams: Vec<StreamWindow>,
    pub patterns: Vec<TriplePattern>,
    pub union_branches: Option<Vec<Vec<TriplePattern>>>,
    pub filters: Vec<FilterExpr>,
    pub temporal_filter: Option<TemporalFilter>,
    pub group_by: Option<Vec<Variable>>,
    pub having: Option<FilterExpr>,
}

impl ContinuousQuery {
    /// Pattern lists to evaluate: the base patterns alone, or base + each
    /// UNION branch.
    pub fn branches(&self) -> Vec<Vec<TriplePattern>> {
        match &self.union_branches {
            None => vec![self.patterns.clone()],
            Some(bs) => bs
                .iter()
                .map(|b| self.patterns.iter().chain(b).cloned().collect())
                .collect(),
        }
    }

    pub fn all_patterns(&self) -> impl Iterator<Item = &TriplePattern> {
        self.patterns
            .iter()
            .chain(self.union_branches.iter().flatten().flatten())
    }

    pub fn pattern_variables(&self) -> BTreeSet<&Variable> {
        self.all_patterns().flat_map(|p| p.variables()).collect()
    }

    /// Stream windows a pattern reads from.
    pub fn windows_for(&self, p: &TriplePattern) -> Vec<StreamWindow> {
        match &p.source {
            PatternSource::Stream(sw) => vec![*sw],
            PatternSource::DefaultStreams => self.from_streams.clone(),
            PatternSource::Static => Vec::new(),
        }
    }

    /// Every distinct stream window referenced by the query.
    pub fn stream_windows(&self) -> Vec<StreamWindow> {
        let mut out: Vec<StreamWindow> = Vec::new();
        for p in self.all_patterns() {
            for sw in self.windows_for(p) {
                if !out.contains(&sw) {
                    out.push(sw);
                }
            }
        }
        out
    }

    pub fn has_stream_pattern(&self) -> bool {
        self.all_patterns().any(|p| !p.is_static())
    }

    pub fn has_aggregates(&self) -> bool {
        self.select
            .iter()
            .any(|s| matches!(s, SelectItem::Count { .. }))
    }

    pub fn output_names(&self) -> Vec<String> {
        self.select.iter().map(|s| s.output().0.clone()).collect()
    }

    fn map_windows(&mut self, mut f: impl FnMut(&mut WindowSpec)) {
        for sw in &mut self.from_streams {
            f(&mut sw.window);
        }
        let patterns = self
            .patterns
            .iter_mut()
            .chain(self.union_branches.iter_mut().flatten().flatten());
        for p in patterns {
            if let PatternSource::Stream(sw) = &mut p.source {
                f(&mut sw.window);
            }
        }
    }

    /// Copy with every window range replaced.
    pub fn with_range(&self, range: WindowRange) -> Self {
        let mut q = self.clone();
        q.map_windows(|w| w.range = range);
        q
    }

    pub fn with_step(&self, step_ms: u64) -> Self {
        let mut q = self.clone();
        q.map_windows(|w| w.step_ms = step_ms);
        q
    }

    /// Landmark variant: every window unbounded.
    pub fn landmark(&self) -> Self {
        self.with_range(WindowRange::Unbounded)
    }

    /// Rewrites a `FROM STREAM` query to read the same window from streams
    /// `0..k`. Stream-scoped blocks are left alone.
    pub fn over_streams(&self, k: u32) -> Self {
        let mut q = self.clone();
        if let Some(first) = self.from_streams.first() {
            q.from_streams = (0..k)
                .map(|i| StreamWindow {
                    stream: StreamId(i),
                    window: first.window,
                })
                .collect();
        }
        q
    }

    /// Copy without the given base pattern (used to build chain-free variants).
    pub fn without_pattern(&self, index: usize) -> Self {
        let mut q = self.clone();
        q.patterns.remove(index);
        q
    }
}
