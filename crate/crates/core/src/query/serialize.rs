//! Query text rendering. The output always parses back to an equal AST;
//! IRIs are written in full even when a prefix is declared.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

/// Renders milliseconds with the largest unit that divides them exactly.
pub fn format_duration(ms: u64) -> String {
    for (unit, size) in [("h", 3_600_000), ("m", 60_000), ("s", 1000)] {
        if ms.is_multiple_of(size) {
            return format!("{}{unit}", ms / size);
        }
    }
    format!("{ms}ms")
}

impl Display for WindowSpec {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.range {
            WindowRange::Millis(r) => write!(f, "[RANGE {}", format_duration(r))?,
            WindowRange::Unbounded => f.write_str("[RANGE UNBOUNDED")?,
        }
        write!(f, " STEP {}]", format_duration(self.step_ms))
    }
}

impl Display for PatternTerm {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => v.fmt(f),
            PatternTerm::Const(t) => t.fmt(f),
        }
    }
}

impl Display for Operand {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => v.fmt(f),
            Operand::Const(t) => t.fmt(f),
            Operand::Count(v) => write!(f, "COUNT({v})"),
        }
    }
}

impl Display for FilterExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            FilterExpr::Or(a, b) => write!(f, "({a} || {b})"),
            FilterExpr::And(a, b) => write!(f, "({a} && {b})"),
            FilterExpr::Not(a) => write!(f, "!({a})"),
            FilterExpr::StrEndsWith(o, s) => {
                write!(f, "strEndsWith({o}, ")?;
                write!(f, "{}", crate::rdf::Term::string(s.clone()))?;
                f.write_char(')')
            }
            FilterExpr::Compare(op, a, b) => {
                let op = match op {
                    CompareOp::Eq => "=",
                    CompareOp::Lt => "<",
                    CompareOp::Gt => ">",
                };
                write!(f, "({a} {op} {b})")
            }
        }
    }
}

fn write_patterns(f: &mut Formatter<'_>, patterns: &[TriplePattern], indent: &str) -> fmt::Result {
    let mut i = 0;
    while i < patterns.len() {
        let source = &patterns[i].source;
        let run = patterns[i..].iter().take_while(|p| p.source == *source).count();
        let block = &patterns[i..i + run];
        let inner = match source {
            PatternSource::DefaultStreams => {
                for p in block {
                    writeln!(f, "{indent}{} {} {} .", p.s, p.p, p.o)?;
                }
                i += run;
                continue;
            }
            PatternSource::Stream(sw) => {
                writeln!(f, "{indent}STREAM <{}> {} {{", sw.stream.iri(), sw.window)?;
                format!("{indent}  ")
            }
            PatternSource::Static => {
                writeln!(f, "{indent}STATIC {{")?;
                format!("{indent}  ")
            }
        };
        for p in block {
            writeln!(f, "{inner}{} {} {} .", p.s, p.p, p.o)?;
        }
        writeln!(f, "{indent}}}")?;
        i += run;
    }
    Ok(())
}

impl Display for ContinuousQuery {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (p, iri) in &self.prefixes {
            writeln!(f, "PREFIX {p}: <{iri}>")?;
        }
        let policy = match self.report {
            ReportPolicy::Rstream => "RSTREAM",
            ReportPolicy::Istream => "ISTREAM",
        };
        match (&self.name, self.report) {
            (Some(name), _) => writeln!(f, "REGISTER {policy} {name} AS")?,
            (None, ReportPolicy::Istream) => writeln!(f, "REGISTER {policy} AS")?,
            (None, ReportPolicy::Rstream) => {}
        }
        f.write_str("SELECT")?;
        for item in &self.select {
            match item {
                SelectItem::Var(v) => write!(f, " {v}")?,
                SelectItem::Count { var, alias } => write!(f, " (COUNT({var}) AS {alias})")?,
            }
        }
        f.write_char('\n')?;
        for sw in &self.from_streams {
            writeln!(f, "FROM STREAM <{}> {}", sw.stream.iri(), sw.window)?;
        }
        f.write_str("WHERE {\n")?;
        write_patterns(f, &self.patterns, "  ")?;
        if let Some(branches) = &self.union_branches {
            for (i, b) in branches.iter().enumerate() {
                f.write_str(if i == 0 { "  {\n" } else { "  UNION {\n" })?;
                write_patterns(f, b, "    ")?;
                f.write_str("  }\n")?;
            }
        }
        for e in &self.filters {
            writeln!(f, "  FILTER({e})")?;
        }
        if let Some(tf) = &self.temporal_filter {
            match tf.within {
                TemporalBound::Window => writeln!(f, "  FILTER(TIMESTAMP({}) WITHIN WINDOW)", tf.var)?,
                TemporalBound::Millis(ms) => {
                    writeln!(f, "  FILTER(TIMESTAMP({}) WITHIN {})", tf.var, format_duration(ms))?
                }
            }
        }
        f.write_str("}\n")?;
        if let Some(keys) = &self.group_by {
            f.write_str("GROUP BY")?;
            for k in keys {
                write!(f, " {k}")?;
            }
            f.write_char('\n')?;
        }
        if let Some(h) = &self.having {
            writeln!(f, "HAVING ({h})")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations_pick_largest_exact_unit() {
        assert_eq!(format_duration(300_000), "5m");
        assert_eq!(format_duration(1500), "1500ms");
        assert_eq!(format_duration(7_200_000), "2h");
        assert_eq!(format_duration(1000), "1s");
    }
}
