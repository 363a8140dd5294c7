use std::collections::BTreeSet;

use crate::rdf::Term;

use super::ast::*;
use super::QueryError;

/// Static checks shared by the parser and programmatically built queries.
pub fn validate(q: &ContinuousQuery) -> Result<(), QueryError> {
    if q.select.is_empty() {
        return Err(QueryError::Invalid("empty select list".into()));
    }
    if q.patterns.is_empty() && q.union_branches.is_none() {
        return Err(QueryError::Invalid("WHERE clause has no patterns".into()));
    }
    if let Some(bs) = &q.union_branches {
        if bs.len() < 2 || bs.iter().any(Vec::is_empty) {
            return Err(QueryError::Invalid("UNION needs at least two non-empty branches".into()));
        }
    }
    let mut seen_streams = BTreeSet::new();
    for sw in &q.from_streams {
        if !seen_streams.insert(sw.stream) {
            return Err(QueryError::Invalid(format!("stream {} declared twice", sw.stream)));
        }
    }
    for p in q.all_patterns() {
        if let PatternSource::Stream(sw) = &p.source {
            check_window(&sw.window)?;
        }
        if p.source == PatternSource::DefaultStreams && q.from_streams.is_empty() {
            return Err(QueryError::Invalid(
                "patterns outside STREAM/STATIC blocks need a FROM STREAM clause".into(),
            ));
        }
        for t in p.terms() {
            if let PatternTerm::Const(Term::BlankNode(_)) = t {
                return Err(QueryError::Invalid("blank nodes are not allowed in queries".into()));
            }
        }
        if let PatternTerm::Const(c) = &p.p {
            if c.is_literal() {
                return Err(QueryError::Invalid("literal in predicate position".into()));
            }
        }
        if let PatternTerm::Const(c) = &p.s {
            if c.is_literal() {
                return Err(QueryError::Invalid("literal in subject position".into()));
            }
        }
    }
    for sw in &q.from_streams {
        check_window(&sw.window)?;
    }

    let mentioned = q.pattern_variables();
    // Variables bound in every solution: base patterns plus those common to all branches.
    let always: BTreeSet<&Variable> = {
        let mut s: BTreeSet<&Variable> = q.patterns.iter().flat_map(|p| p.variables()).collect();
        if let Some(bs) = &q.union_branches {
            let mut common: Option<BTreeSet<&Variable>> = None;
            for b in bs {
                let vs: BTreeSet<&Variable> = b.iter().flat_map(|p| p.variables()).collect();
                common = Some(match common {
                    None => vs,
                    Some(c) => c.intersection(&vs).copied().collect(),
                });
            }
            s.extend(common.unwrap_or_default());
        }
        s
    };
    let bound = |v: &Variable| -> Result<(), QueryError> {
        if mentioned.contains(v) {
            Ok(())
        } else {
            Err(QueryError::UnboundVariable(v.0.clone()))
        }
    };

    let mut outputs = BTreeSet::new();
    for item in &q.select {
        match item {
            SelectItem::Var(v) => {
                bound(v)?;
                if !always.contains(v) {
                    return Err(QueryError::Invalid(format!(
                        "?{} is not bound in every UNION branch",
                        v.0
                    )));
                }
            }
            SelectItem::Count { var, alias } => {
                bound(var)?;
                if mentioned.contains(alias) {
                    return Err(QueryError::Invalid(format!(
                        "aggregate alias ?{} clashes with a pattern variable",
                        alias.0
                    )));
                }
            }
        }
        if !outputs.insert(item.output()) {
            return Err(QueryError::Invalid(format!("duplicate output ?{}", item.output().0)));
        }
    }

    for f in &q.filters {
        check_filter(f, &bound, false)?;
    }

    if let Some(tf) = &q.temporal_filter {
        bound(&tf.var)?;
        let in_stream = q
            .all_patterns()
            .any(|p| !p.is_static() && p.variables().any(|v| *v == tf.var));
        if !in_stream {
            return Err(QueryError::Type(format!(
                "TIMESTAMP(?{}) needs a variable bound by a stream pattern",
                tf.var.0
            )));
        }
        if let TemporalBound::Millis(0) = tf.within {
            return Err(QueryError::Invalid("TIMESTAMP bound must be positive".into()));
        }
    }

    match &q.group_by {
        None => {
            if q.has_aggregates() {
                return Err(QueryError::Invalid("aggregates require GROUP BY".into()));
            }
            if q.having.is_some() {
                return Err(QueryError::Invalid("HAVING requires GROUP BY".into()));
            }
        }
        Some(keys) => {
            if keys.is_empty() {
                return Err(QueryError::Invalid("empty GROUP BY".into()));
            }
            for k in keys {
                bound(k)?;
                if !always.contains(k) {
                    return Err(QueryError::Invalid(format!(
                        "group key ?{} is not bound in every UNION branch",
                        k.0
                    )));
                }
            }
            for item in &q.select {
                if let SelectItem::Var(v) = item {
                    if !keys.contains(v) {
                        return Err(QueryError::Invalid(format!(
                            "?{} is selected but not grouped",
                            v.0
                        )));
                    }
                }
            }
            if let Some(h) = &q.having {
                check_filter(h, &bound, true)?;
                for op in h.operands() {
                    if let Operand::Var(v) = op {
                        if !keys.contains(v) {
                            return Err(QueryError::Invalid(format!(
                                "HAVING refers to ungrouped ?{}",
                                v.0
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_window(w: &WindowSpec) -> Result<(), QueryError> {
    if w.range == WindowRange::Millis(0) {
        return Err(QueryError::Invalid("window range must be positive".into()));
    }
    if w.step_ms == 0 {
        return Err(QueryError::Invalid("window step must be positive".into()));
    }
    Ok(())
}

fn check_filter(
    f: &FilterExpr,
    bound: &impl Fn(&Variable) -> Result<(), QueryError>,
    in_having: bool,
) -> Result<(), QueryError> {
    for op in f.operands() {
        match op {
            Operand::Var(v) => bound(v)?,
            Operand::Count(v) => {
                if !in_having {
                    return Err(QueryError::Type("COUNT is only allowed in HAVING".into()));
                }
                bound(v)?;
            }
            Operand::Const(Term::BlankNode(_)) => {
                return Err(QueryError::Invalid("blank nodes are not allowed in queries".into()))
            }
            Operand::Const(_) => {}
        }
    }
    check_types(f)
}

fn check_types(f: &FilterExpr) -> Result<(), QueryError> {
    match f {
        FilterExpr::Or(a, b) | FilterExpr::And(a, b) => {
            check_types(a)?;
            check_types(b)
        }
        FilterExpr::Not(a) => check_types(a),
        FilterExpr::StrEndsWith(op, _) => match op {
            Operand::Count(_) => Err(QueryError::Type("strEndsWith applied to COUNT".into())),
            Operand::Const(t) if t.as_str_literal().is_none() => Err(QueryError::Type(format!(
                "strEndsWith applied to non-string {t}"
            ))),
            _ => Ok(()),
        },
        FilterExpr::Compare(op, a, b) => {
            if *op != CompareOp::Eq {
                for x in [a, b] {
                    if let Operand::Const(t) = x {
                        if t.as_number().is_none() {
                            return Err(QueryError::Type(format!("ordering comparison on non-numeric {t}")));
                        }
                    }
                }
            }
            Ok(())
        }
    }
}
