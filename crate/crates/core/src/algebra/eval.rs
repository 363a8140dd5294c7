use std::collections::BTreeSet;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::query::CompareOp;
use crate::rdf::{Dictionary, StaticGraph, Term, TermId, TimestampedTriple};

use super::plan::{CompiledFilter, CompiledOperand, CompiledPattern, CompiledSelect, QueryPlan};
use super::table::{join_tables, BindingTable, UNBOUND};
use super::AlgebraError;

/// One projected answer row, in select-list order.
pub type Answer = Vec<TermId>;

/// Set of answers of one execution.
pub type AnswerSet = BTreeSet<Answer>;

/// Where a pattern reads its triples from during one evaluation.
#[derive(Debug, Clone, Copy)]
pub enum PatternInput<'a> {
    Triples(&'a [TimestampedTriple]),
    Static(&'a StaticGraph),
}

enum Val<'a> {
    Owned(Arc<Term>),
    Borrowed(&'a Term),
    Count(i64),
}

impl Val<'_> {
    fn term(&self) -> Option<&Term> {
        match self {
            Val::Owned(t) => Some(t),
            Val::Borrowed(t) => Some(t),
            Val::Count(_) => None,
        }
    }

    fn number(&self) -> Option<f64> {
        match self {
            Val::Count(n) => Some(*n as f64),
            other => other.term().and_then(Term::as_number),
        }
    }
}

fn operand<'a>(
    o: &'a CompiledOperand,
    row: &[TermId],
    counts: &dyn Fn(usize) -> i64,
    dict: &Dictionary,
) -> Result<Option<Val<'a>>, AlgebraError> {
    Ok(match o {
        CompiledOperand::Var(i) => {
            let id = row[*i];
            if id == UNBOUND {
                None
            } else {
                Some(Val::Owned(dict.resolve(id)?))
            }
        }
        CompiledOperand::Const(_, t) => Some(Val::Borrowed(t)),
        CompiledOperand::Count(i) => Some(Val::Count(counts(*i))),
    })
}

/// Three-valued filter evaluation: `None` stands for an unbound operand,
/// which makes the filter reject the row unless a disjunct holds.
pub fn eval_filter(
    f: &CompiledFilter,
    row: &[TermId],
    counts: &dyn Fn(usize) -> i64,
    dict: &Dictionary,
) -> Result<Option<bool>, AlgebraError> {
    Ok(match f {
        CompiledFilter::Or(a, b) => {
            let (x, y) = (eval_filter(a, row, counts, dict)?, eval_filter(b, row, counts, dict)?);
            match (x, y) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            }
        }
        CompiledFilter::And(a, b) => {
            let (x, y) = (eval_filter(a, row, counts, dict)?, eval_filter(b, row, counts, dict)?);
            match (x, y) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            }
        }
        CompiledFilter::Not(a) => eval_filter(a, row, counts, dict)?.map(|b| !b),
        CompiledFilter::StrEndsWith(o, suffix) => match operand(o, row, counts, dict)? {
            None => None,
            Some(v) => match v.term().and_then(Term::as_str_literal) {
                Some(s) => Some(s.ends_with(suffix.as_str())),
                None => {
                    return Err(AlgebraError::Type(format!(
                        "strEndsWith applied to non-string {}",
                        v.term().map_or_else(|| "COUNT".to_string(), Term::to_string)
                    )))
                }
            },
        },
        CompiledFilter::Compare(op, a, b) => {
            let (Some(x), Some(y)) = (operand(a, row, counts, dict)?, operand(b, row, counts, dict)?) else {
                return Ok(None);
            };
            match (x.number(), y.number(), op) {
                (Some(p), Some(q), CompareOp::Eq) => Some(p == q),
                (Some(p), Some(q), CompareOp::Lt) => Some(p < q),
                (Some(p), Some(q), CompareOp::Gt) => Some(p > q),
                (_, _, CompareOp::Eq) => Some(x.term().is_some() && x.term() == y.term()),
                _ => return Err(AlgebraError::Type("ordering comparison on non-numeric operands".into())),
            }
        }
    })
}

fn no_counts(_: usize) -> i64 {
    0
}

fn apply_filter(table: &mut BindingTable, f: &CompiledFilter, dict: &Dictionary) -> Result<(), AlgebraError> {
    let mut err = None;
    table.retain(|row| match eval_filter(f, row, &no_counts, dict) {
        Ok(v) => v == Some(true),
        Err(e) => {
            err.get_or_insert(e);
            false
        }
    });
    err.map_or(Ok(()), Err)
}

/// Evaluates patterns left to right over their inputs, starting from
/// `initial` (or the unit table). Stream patterns are scanned into candidate
/// tables and hash-joined; static patterns are answered by index lookups
/// with the variables bound so far. Each filter runs as soon as every
/// variable it reads is bound: on a single pattern's candidates when that
/// pattern binds all of them. With `close`, filters still pending at the end
/// see unbound variables and reject; without it they are left for a later
/// stage.
///
/// Probes: one per triple scanned, one per index lookup, one per static
/// candidate examined, plus join probes.
#[allow(clippy::too_many_arguments)]
pub fn match_bgp(
    width: usize,
    initial: Option<BindingTable>,
    patterns: &[&CompiledPattern],
    inputs: &[PatternInput<'_>],
    filters: &[CompiledFilter],
    close: bool,
    now: u64,
    dict: &Dictionary,
    probes: &mut u64,
) -> Result<BindingTable, AlgebraError> {
    assert_eq!(patterns.len(), inputs.len());
    let filter_vars: Vec<Vec<usize>> = filters.iter().map(CompiledFilter::vars).collect();
    let mut pending: Vec<bool> = vec![true; filters.len()];
    let mut current = initial;
    if let Some(t) = current.as_mut() {
        apply_ready(t, filters, &filter_vars, &mut pending, dict)?;
    }

    for (p, input) in patterns.iter().zip(inputs) {
        match input {
            PatternInput::Triples(snapshot) => {
                let mut cand = BindingTable::new(width, p.vars());
                let mut row = vec![UNBOUND; width];
                let vars = p.vars();
                for tt in *snapshot {
                    *probes += 1;
                    if let Some(d) = p.within {
                        if tt.t.saturating_add(d) <= now {
                            continue;
                        }
                    }
                    for &v in &vars {
                        row[v] = UNBOUND;
                    }
                    if p.bind(&tt.triple, &mut row) {
                        cand.push(&row);
                    }
                }
                apply_ready(&mut cand, filters, &filter_vars, &mut pending, dict)?;
                current = Some(match current {
                    None => cand,
                    Some(cur) => join_tables(&cur, &cand, probes),
                });
            }
            PatternInput::Static(graph) => {
                let cur = current.unwrap_or_else(|| BindingTable::unit(width));
                let mut domain = cur.domain().to_vec();
                domain.extend(p.vars().into_iter().filter(|v| !cur.domain().contains(v)));
                domain.sort_unstable();
                let mut out = BindingTable::new(width, domain);
                let mut buf = vec![UNBOUND; width];
                for r in cur.rows() {
                    *probes += 1;
                    let [s, pr, o] = p.lookup_key(r);
                    for t in graph.lookup(s, pr, o) {
                        *probes += 1;
                        buf.copy_from_slice(r);
                        if p.bind(&t, &mut buf) {
                            out.push(&buf);
                        }
                    }
                }
                current = Some(out);
            }
        }
        if let Some(t) = current.as_mut() {
            apply_ready(t, filters, &filter_vars, &mut pending, dict)?;
            if t.is_empty() {
                break;
            }
        }
    }

    let mut out = current.unwrap_or_else(|| BindingTable::unit(width));
    for (f, pend) in filters.iter().zip(&pending) {
        if close && *pend {
            apply_filter(&mut out, f, dict)?;
        }
    }
    Ok(out)
}

fn apply_ready(
    table: &mut BindingTable,
    filters: &[CompiledFilter],
    filter_vars: &[Vec<usize>],
    pending: &mut [bool],
    dict: &Dictionary,
) -> Result<(), AlgebraError> {
    for (i, f) in filters.iter().enumerate() {
        if pending[i]
            && !filter_vars[i].is_empty()
            && filter_vars[i].iter().all(|v| table.domain().contains(v))
        {
            apply_filter(table, f, dict)?;
            pending[i] = false;
        }
    }
    Ok(())
}

/// Deduplicates complete bindings, groups and counts, applies HAVING and
/// projects to the select list. Filters are expected to have run already.
pub fn finalize(rows: &BindingTable, plan: &QueryPlan, dict: &Dictionary) -> Result<AnswerSet, AlgebraError> {
    let mut seen: FxHashSet<&[TermId]> = FxHashSet::default();
    let distinct: Vec<&[TermId]> = rows.rows().filter(|r| seen.insert(*r)).collect();
    let mut out = AnswerSet::new();

    let Some(keys) = &plan.group_by else {
        for r in distinct {
            let answer: Answer = plan
                .select
                .iter()
                .map(|s| match s {
                    CompiledSelect::Var(i) => r[*i],
                    CompiledSelect::Count(_) => unreachable!("aggregates require GROUP BY"),
                })
                .collect();
            if answer.iter().all(|&id| id != UNBOUND) {
                out.insert(answer);
            }
        }
        return Ok(out);
    };

    let mut groups: FxHashMap<Vec<TermId>, Vec<usize>> = FxHashMap::default();
    for r in &distinct {
        let key: Vec<TermId> = keys.iter().map(|&k| r[k]).collect();
        if key.contains(&UNBOUND) {
            continue;
        }
        let counts = groups.entry(key).or_insert_with(|| vec![0; plan.counted.len()]);
        for (c, &slot) in plan.counted.iter().enumerate() {
            if r[slot] != UNBOUND {
                counts[c] += 1;
            }
        }
    }
    for (key, counts) in groups {
        out.extend(group_answer(&key, &counts, plan, dict)?);
    }
    Ok(out)
}

/// Answer of one group given its key and per-`plan.counted` counts, or
/// `None` when HAVING rejects it.
pub fn group_answer(
    key: &[TermId],
    counts: &[usize],
    plan: &QueryPlan,
    dict: &Dictionary,
) -> Result<Option<Answer>, AlgebraError> {
    let keys = plan.group_by.as_deref().unwrap_or(&[]);
    let count_of = |slot: usize| {
        plan.counted
            .iter()
            .position(|&c| c == slot)
            .map_or(0, |i| counts[i] as i64)
    };
    if let Some(h) = &plan.having {
        let mut row = vec![UNBOUND; plan.width()];
        for (k, &slot) in keys.iter().enumerate() {
            row[slot] = key[k];
        }
        if eval_filter(h, &row, &count_of, dict)? != Some(true) {
            return Ok(None);
        }
    }
    Ok(Some(
        plan.select
            .iter()
            .map(|s| match s {
                CompiledSelect::Var(i) => {
                    let k = keys.iter().position(|k| k == i).expect("selected variables are grouped");
                    key[k]
                }
                CompiledSelect::Count(i) => dict.intern(&Term::integer(count_of(*i))),
            })
            .collect(),
    ))
}

/// Evaluates every branch of a plan with one input per pattern and returns
/// the final answers. `input_for(branch, pattern)` supplies the inputs.
pub fn evaluate<'a>(
    plan: &QueryPlan,
    mut input_for: impl FnMut(usize, usize) -> PatternInput<'a>,
    now: u64,
    dict: &Dictionary,
    probes: &mut u64,
) -> Result<AnswerSet, AlgebraError> {
    let mut all = BindingTable::new(plan.width(), Vec::new());
    for (b, branch) in plan.branches.iter().enumerate() {
        let refs: Vec<&CompiledPattern> = branch.iter().collect();
        let inputs: Vec<PatternInput<'a>> = (0..branch.len()).map(|i| input_for(b, i)).collect();
        let rows = match_bgp(plan.width(), None, &refs, &inputs, &plan.filters, true, now, dict, probes)?;
        all.append(&rows);
    }
    finalize(&all, plan, dict)
}
