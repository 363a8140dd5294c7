//! Queries compiled against a dictionary: variables become row slots and
//! constants become term ids.

use crate::query::{
    CompareOp, ContinuousQuery, FilterExpr, Operand, PatternSource, PatternTerm, SelectItem,
    TemporalBound, TriplePattern, Variable,
};
use crate::rdf::{Dictionary, Term, TermId, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Const(TermId),
    Var(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledPattern {
    pub slots: [Slot; 3],
    pub source: PatternSource,
    /// Extra recency bound pushed down from `TIMESTAMP(?v) WITHIN d`: only
    /// triples with `now - d < t` may match.
    pub within: Option<u64>,
}

impl CompiledPattern {
    pub fn vars(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .slots
            .iter()
            .filter_map(|s| match s {
                Slot::Var(i) => Some(*i),
                Slot::Const(_) => None,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_static(&self) -> bool {
        self.source == PatternSource::Static
    }

    /// Whether the constant positions agree with `t`.
    pub fn accepts(&self, t: &Triple) -> bool {
        [t.s, t.p, t.o]
            .iter()
            .zip(&self.slots)
            .all(|(id, s)| match s {
                Slot::Const(c) => c == id,
                Slot::Var(_) => true,
            })
    }

    /// Writes the bindings `t` induces into `row`; false on a constant
    /// mismatch or a conflict with a value already in `row`.
    pub fn bind(&self, t: &Triple, row: &mut [TermId]) -> bool {
        for (id, s) in [t.s, t.p, t.o].into_iter().zip(&self.slots) {
            match *s {
                Slot::Const(c) => {
                    if c != id {
                        return false;
                    }
                }
                Slot::Var(i) => {
                    if row[i] == super::UNBOUND {
                        row[i] = id;
                    } else if row[i] != id {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Bound values for (s, p, o) under `row`, for index lookups.
    pub fn lookup_key(&self, row: &[TermId]) -> [Option<TermId>; 3] {
        self.slots.map(|s| match s {
            Slot::Const(c) => Some(c),
            Slot::Var(i) => Some(row[i]).filter(|&v| v != super::UNBOUND),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompiledOperand {
    Var(usize),
    Const(TermId, Term),
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompiledFilter {
    Or(Box<CompiledFilter>, Box<CompiledFilter>),
    And(Box<CompiledFilter>, Box<CompiledFilter>),
    Not(Box<CompiledFilter>),
    StrEndsWith(CompiledOperand, String),
    Compare(CompareOp, CompiledOperand, CompiledOperand),
}

impl CompiledFilter {
    /// Row slots the expression reads (COUNT operands excluded).
    pub fn vars(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        let mut op = |o: &CompiledOperand| {
            if let CompiledOperand::Var(i) = o {
                out.push(*i);
            }
        };
        match self {
            CompiledFilter::Or(a, b) | CompiledFilter::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            CompiledFilter::Not(a) => a.collect_vars(out),
            CompiledFilter::StrEndsWith(o, _) => op(o),
            CompiledFilter::Compare(_, a, b) => {
                op(a);
                op(b);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompiledSelect {
    Var(usize),
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryPlan {
    /// Slot `i` holds `vars[i]`.
    pub vars: Vec<Variable>,
    /// Base patterns followed by one UNION branch each (or the base alone).
    pub branches: Vec<Vec<CompiledPattern>>,
    pub filters: Vec<CompiledFilter>,
    pub group_by: Option<Vec<usize>>,
    pub having: Option<CompiledFilter>,
    pub select: Vec<CompiledSelect>,
    /// Slots counted by COUNT in the select list or HAVING.
    pub counted: Vec<usize>,
}

impl QueryPlan {
    pub fn compile(q: &ContinuousQuery, dict: &Dictionary) -> Self {
        let mut vars: Vec<Variable> = Vec::new();
        for p in q.all_patterns() {
            for v in p.variables() {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        let slot = |v: &Variable| {
            vars.iter()
                .position(|x| x == v)
                .unwrap_or_else(|| panic!("?{} is not bound by any pattern", v.0))
        };
        let compile_term = |t: &PatternTerm| match t {
            PatternTerm::Var(v) => Slot::Var(slot(v)),
            PatternTerm::Const(c) => Slot::Const(dict.intern(c)),
        };
        let compile_pattern = |p: &TriplePattern| CompiledPattern {
            slots: [compile_term(&p.s), compile_term(&p.p), compile_term(&p.o)],
            source: p.source.clone(),
            within: None,
        };

        let mut branches: Vec<Vec<CompiledPattern>> = q
            .branches()
            .iter()
            .map(|b| b.iter().map(compile_pattern).collect())
            .collect();
        if let Some(tf) = &q.temporal_filter {
            if let TemporalBound::Millis(d) = tf.within {
                let s = slot(&tf.var);
                for b in &mut branches {
                    if let Some(p) = b
                        .iter_mut()
                        .find(|p| !p.is_static() && p.vars().contains(&s))
                    {
                        p.within = Some(d);
                    }
                }
            }
        }

        let compile_operand = |o: &Operand| match o {
            Operand::Var(v) => CompiledOperand::Var(slot(v)),
            Operand::Const(t) => CompiledOperand::Const(dict.intern(t), t.clone()),
            Operand::Count(v) => CompiledOperand::Count(slot(v)),
        };
        fn compile_filter(
            e: &FilterExpr,
            op: &dyn Fn(&Operand) -> CompiledOperand,
        ) -> CompiledFilter {
            match e {
                FilterExpr::Or(a, b) => CompiledFilter::Or(
                    Box::new(compile_filter(a, op)),
                    Box::new(compile_filter(b, op)),
                ),
                FilterExpr::And(a, b) => CompiledFilter::And(
                    Box::new(compile_filter(a, op)),
                    Box::new(compile_filter(b, op)),
                ),
                FilterExpr::Not(a) => CompiledFilter::Not(Box::new(compile_filter(a, op))),
                FilterExpr::StrEndsWith(o, s) => CompiledFilter::StrEndsWith(op(o), s.clone()),
                FilterExpr::Compare(c, a, b) => CompiledFilter::Compare(*c, op(a), op(b)),
            }
        }

        let filters = q
            .filters
            .iter()
            .map(|f| compile_filter(f, &compile_operand))
            .collect();
        let having = q.having.as_ref().map(|h| compile_filter(h, &compile_operand));
        let select: Vec<CompiledSelect> = q
            .select
            .iter()
            .map(|s| match s {
                SelectItem::Var(v) => CompiledSelect::Var(slot(v)),
                SelectItem::Count { var, .. } => CompiledSelect::Count(slot(var)),
            })
            .collect();
        let mut counted: Vec<usize> = select
            .iter()
            .filter_map(|s| match s {
                CompiledSelect::Count(i) => Some(*i),
                CompiledSelect::Var(_) => None,
            })
            .collect();
        if let Some(h) = &q.having {
            for o in h.operands() {
                if let Operand::Count(v) = o {
                    counted.push(slot(v));
                }
            }
        }
        counted.sort_unstable();
        counted.dedup();

        QueryPlan {
            group_by: q
                .group_by
                .as_ref()
                .map(|g| g.iter().map(slot).collect()),
            vars,
            branches,
            filters,
            having,
            select,
            counted,
        }
    }

    pub fn width(&self) -> usize {
        self.vars.len()
    }
}
