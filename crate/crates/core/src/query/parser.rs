use crate::rdf::{Datatype, StreamId, Term};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::validate::validate;
use super::QueryError;

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

/// Parses and validates a continuous query.
pub fn parse_continuous_query(text: &str) -> Result<ContinuousQuery, QueryError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        prefixes: Vec::new(),
        from_streams: Vec::new(),
    };
    let q = p.query()?;
    validate(&q)?;
    Ok(q)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    prefixes: Vec<(String, String)>,
    from_streams: Vec<StreamWindow>,
}

#[derive(Default)]
struct Group {
    patterns: Vec<TriplePattern>,
    union: Option<Vec<Vec<TriplePattern>>>,
    filters: Vec<FilterExpr>,
    temporal: Option<TemporalFilter>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, QueryError> {
        let t = &self.toks[self.pos];
        Err(QueryError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected {kw}, found {}", describe(self.peek())))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), QueryError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.err(format!("expected {}, found {}", describe(&tok), describe(self.peek())))
        }
    }

    fn var(&mut self) -> Result<Variable, QueryError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Ok(Variable(v))
            }
            other => self.err(format!("expected a variable, found {}", describe(&other))),
        }
    }

    fn query(&mut self) -> Result<ContinuousQuery, QueryError> {
        self.prologue()?;
        let (name, report) = if self.eat_kw("REGISTER") {
            let report = if self.eat_kw("QUERY") || self.eat_kw("RSTREAM") {
                ReportPolicy::Rstream
            } else if self.eat_kw("ISTREAM") {
                ReportPolicy::Istream
            } else {
                return self.err("expected QUERY, RSTREAM or ISTREAM after REGISTER");
            };
            let name = match self.peek().clone() {
                Tok::Ident(w) if !w.eq_ignore_ascii_case("AS") => {
                    self.next();
                    Some(w)
                }
                _ => None,
            };
            self.expect_kw("AS")?;
            (name, report)
        } else {
            (None, ReportPolicy::Rstream)
        };
        self.prologue()?;

        self.expect_kw("SELECT")?;
        self.eat_kw("DISTINCT");
        let select = self.select_items()?;

        while self.eat_kw("FROM") {
            self.expect_kw("STREAM")?;
            let stream = self.stream_iri()?;
            let window = self.window()?;
            if self.from_streams.iter().any(|sw| sw.stream == stream) {
                return self.err(format!("stream {} declared twice", stream.iri()));
            }
            self.from_streams.push(StreamWindow { stream, window });
        }

        self.expect_kw("WHERE")?;
        self.expect(Tok::LBrace)?;
        let group = self.group()?;
        self.expect(Tok::RBrace)?;

        let group_by = if self.eat_kw("GROUP") {
            self.expect_kw("BY")?;
            let mut vars = vec![self.var()?];
            while let Tok::Var(_) = self.peek() {
                vars.push(self.var()?);
            }
            Some(vars)
        } else {
            None
        };
        let having = if self.eat_kw("HAVING") {
            Some(self.filter_expr()?)
        } else {
            None
        };
        if *self.peek() != Tok::Eof {
            return self.err(format!("unexpected {}", describe(self.peek())));
        }

        Ok(ContinuousQuery {
            name,
            prefixes: std::mem::take(&mut self.prefixes),
            report,
            select,
            from_streams: std::mem::take(&mut self.from_streams),
            patterns: group.patterns,
            union_branches: group.union,
            filters: group.filters,
            temporal_filter: group.temporal,
            group_by,
            having,
        })
    }

    fn prologue(&mut self) -> Result<(), QueryError> {
        while self.eat_kw("PREFIX") {
            let prefix = match self.next().tok {
                Tok::PName(p, local) if local.is_empty() => p,
                other => {
                    self.pos -= 1;
                    return self.err(format!("expected a prefix name, found {}", describe(&other)));
                }
            };
            let iri = match self.next().tok {
                Tok::Iri(i) => i,
                other => {
                    self.pos -= 1;
                    return self.err(format!("expected an IRI, found {}", describe(&other)));
                }
            };
            self.prefixes.retain(|(p, _)| *p != prefix);
            self.prefixes.push((prefix, iri));
        }
        Ok(())
    }

    fn select_items(&mut self) -> Result<Vec<SelectItem>, QueryError> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::Var(_) => items.push(SelectItem::Var(self.var()?)),
                Tok::LParen => {
                    self.next();
                    self.expect_kw("COUNT")?;
                    self.expect(Tok::LParen)?;
                    self.eat_kw("DISTINCT");
                    let var = self.var()?;
                    self.expect(Tok::RParen)?;
                    self.expect_kw("AS")?;
                    let alias = self.var()?;
                    self.expect(Tok::RParen)?;
                    items.push(SelectItem::Count { var, alias });
                }
                _ => break,
            }
        }
        if items.is_empty() {
            return self.err("SELECT needs at least one variable or aggregate");
        }
        Ok(items)
    }

    fn iri(&mut self) -> Result<String, QueryError> {
        match self.peek().clone() {
            Tok::Iri(i) => {
                self.next();
                Ok(i)
            }
            Tok::PName(p, local) => {
                let base = match self.prefixes.iter().find(|(q, _)| *q == p) {
                    Some((_, base)) => base.clone(),
                    None if p == "_" => return self.err("blank nodes are not allowed in queries"),
                    None => return self.err(format!("undeclared prefix {p:?}")),
                };
                self.next();
                Ok(format!("{base}{local}"))
            }
            other => self.err(format!("expected an IRI, found {}", describe(&other))),
        }
    }

    fn stream_iri(&mut self) -> Result<StreamId, QueryError> {
        let iri = self.iri()?;
        match StreamId::from_iri(&iri) {
            Some(s) => Ok(s),
            None => {
                self.pos -= 1;
                self.err(format!("<{iri}> is not a stream IRI"))
            }
        }
    }

    fn window(&mut self) -> Result<WindowSpec, QueryError> {
        self.expect(Tok::LBracket)?;
        self.expect_kw("RANGE")?;
        let range = if self.eat_kw("UNBOUNDED") {
            WindowRange::Unbounded
        } else {
            WindowRange::Millis(self.duration()?)
        };
        let step_ms = if self.eat_kw("STEP") || self.eat_kw("SLIDE") {
            self.duration()?
        } else {
            // A window without STEP tumbles; a landmark window re-runs every second.
            range.millis().unwrap_or(1000)
        };
        self.expect(Tok::RBracket)?;
        Ok(WindowSpec { range, step_ms })
    }

    /// `<number>[/<number>] <unit>` normalized to whole, positive milliseconds.
    fn duration(&mut self) -> Result<u64, QueryError> {
        let start = self.pos;
        let (mut num, mut den) = match self.next().tok {
            Tok::Num(n) => match decimal_ratio(&n) {
                Some(r) => r,
                None => {
                    self.pos = start;
                    return self.err(format!("invalid duration {n:?}"));
                }
            },
            other => {
                self.pos = start;
                return self.err(format!("expected a duration, found {}", describe(&other)));
            }
        };
        if self.eat(&Tok::Slash) {
            match self.next().tok {
                Tok::Num(n) => match decimal_ratio(&n) {
                    Some((a, b)) if a > 0 => {
                        num *= b;
                        den *= a;
                    }
                    _ => {
                        self.pos -= 1;
                        return self.err("invalid divisor in duration");
                    }
                },
                other => {
                    self.pos -= 1;
                    return self.err(format!("expected a divisor, found {}", describe(&other)));
                }
            }
        }
        let unit_tok = self.next();
        let unit_ms: u128 = match &unit_tok.tok {
            Tok::Ident(u) => match u.as_str() {
                "ms" => 1,
                "s" => 1000,
                "m" => 60_000,
                "h" => 3_600_000,
                _ => {
                    return Err(QueryError::UnknownUnit {
                        unit: u.clone(),
                        line: unit_tok.line,
                        col: unit_tok.col,
                    })
                }
            },
            other => {
                self.pos -= 1;
                return self.err(format!("expected a duration unit, found {}", describe(other)));
            }
        };
        let total = num * unit_ms;
        if !total.is_multiple_of(den) {
            self.pos = start;
            return self.err("duration is not a whole number of milliseconds");
        }
        let ms = total / den;
        if ms == 0 || ms > u64::MAX as u128 {
            self.pos = start;
            return self.err("duration must be positive");
        }
        Ok(ms as u64)
    }

    fn group(&mut self) -> Result<Group, QueryError> {
        let mut g = Group::default();
        let mut saw_filter = false;
        loop {
            if *self.peek() == Tok::RBrace {
                return Ok(g);
            }
            if self.is_kw("FILTER") {
                saw_filter = true;
                self.filter_clause(&mut g)?;
                continue;
            }
            if saw_filter {
                return self.err("FILTER must come after all patterns of the group");
            }
            if *self.peek() == Tok::LBrace {
                if g.union.is_some() {
                    return self.err("only one UNION block is supported");
                }
                let mut branches = vec![self.braced_patterns()?];
                while self.eat_kw("UNION") {
                    branches.push(self.braced_patterns()?);
                }
                if branches.len() < 2 {
                    return self.err("a nested group must be part of a UNION");
                }
                g.union = Some(branches);
                continue;
            }
            self.pattern_element(&mut g.patterns)?;
        }
    }

    fn braced_patterns(&mut self) -> Result<Vec<TriplePattern>, QueryError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace {
            if self.is_kw("FILTER") || self.is_kw("UNION") || *self.peek() == Tok::LBrace {
                return self.err("UNION branches may only hold triple patterns");
            }
            self.pattern_element(&mut out)?;
        }
        self.next();
        Ok(out)
    }

    /// A `STREAM` block, a `STATIC` block, or a run of default-stream triples.
    fn pattern_element(&mut self, out: &mut Vec<TriplePattern>) -> Result<(), QueryError> {
        if self.eat_kw("STREAM") {
            let stream = self.stream_iri()?;
            let window = if *self.peek() == Tok::LBracket {
                self.window()?
            } else {
                match self.from_streams.iter().find(|sw| sw.stream == stream) {
                    Some(sw) => sw.window,
                    None => return self.err("STREAM block needs a window unless declared in FROM STREAM"),
                }
            };
            let source = PatternSource::Stream(StreamWindow { stream, window });
            self.expect(Tok::LBrace)?;
            self.triples_until_brace(source, out)?;
            self.expect(Tok::RBrace)
        } else if self.eat_kw("STATIC") {
            self.expect(Tok::LBrace)?;
            self.triples_until_brace(PatternSource::Static, out)?;
            self.expect(Tok::RBrace)
        } else {
            self.triples_block(PatternSource::DefaultStreams, out)
        }
    }

    fn triples_until_brace(
        &mut self,
        source: PatternSource,
        out: &mut Vec<TriplePattern>,
    ) -> Result<(), QueryError> {
        while *self.peek() != Tok::RBrace {
            self.triples_block(source.clone(), out)?;
        }
        Ok(())
    }

    /// One subject with its `;`/`,` continuations, ending at `.` or before `}`.
    fn triples_block(&mut self, source: PatternSource, out: &mut Vec<TriplePattern>) -> Result<(), QueryError> {
        let s = self.pattern_term(Position::Subject)?;
        loop {
            let p = self.pattern_term(Position::Predicate)?;
            loop {
                let o = self.pattern_term(Position::Object)?;
                out.push(TriplePattern {
                    s: s.clone(),
                    p: p.clone(),
                    o,
                    source: source.clone(),
                });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            if self.eat(&Tok::Semi) {
                if matches!(self.peek(), Tok::Dot | Tok::RBrace) {
                    break;
                }
                continue;
            }
            break;
        }
        let at_boundary = matches!(self.peek(), Tok::RBrace | Tok::LBrace)
            || ["FILTER", "STREAM", "STATIC"].iter().any(|kw| self.is_kw(kw));
        if !self.eat(&Tok::Dot) && !at_boundary {
            return self.err(format!("expected '.' or '}}', found {}", describe(self.peek())));
        }
        Ok(())
    }

    fn pattern_term(&mut self, pos: Position) -> Result<PatternTerm, QueryError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Ok(PatternTerm::Var(Variable(v)))
            }
            Tok::Ident(w) if pos == Position::Predicate && w == "a" => {
                self.next();
                Ok(PatternTerm::Const(Term::iri(RDF_TYPE)))
            }
            Tok::Iri(_) | Tok::PName(..) => Ok(PatternTerm::Const(Term::Iri(self.iri()?))),
            Tok::Str(_) | Tok::Num(_) if pos == Position::Object => {
                Ok(PatternTerm::Const(self.literal()?))
            }
            Tok::Str(_) | Tok::Num(_) => self.err("literals are only allowed in object position"),
            other => self.err(format!("expected a pattern term, found {}", describe(&other))),
        }
    }

    fn literal(&mut self) -> Result<Term, QueryError> {
        match self.next().tok {
            Tok::Num(n) => Ok(Term::Literal {
                datatype: if n.contains('.') { Datatype::Decimal } else { Datatype::Integer },
                lexical: n,
            }),
            Tok::Str(s) => {
                if self.eat(&Tok::DataTag) {
                    let iri = self.iri()?;
                    match Datatype::from_iri(&iri) {
                        Some(datatype) => Ok(Term::Literal { lexical: s, datatype }),
                        None => {
                            self.pos -= 1;
                            self.err(format!("unsupported datatype <{iri}>"))
                        }
                    }
                } else {
                    Ok(Term::string(s))
                }
            }
            other => {
                self.pos -= 1;
                self.err(format!("expected a literal, found {}", describe(&other)))
            }
        }
    }

    fn filter_clause(&mut self, g: &mut Group) -> Result<(), QueryError> {
        self.expect_kw("FILTER")?;
        if *self.peek() == Tok::LParen
            && matches!(self.peek_at(1), Tok::Ident(w) if w.eq_ignore_ascii_case("TIMESTAMP"))
        {
            self.next();
            self.next();
            self.expect(Tok::LParen)?;
            let var = self.var()?;
            self.expect(Tok::RParen)?;
            self.expect_kw("WITHIN")?;
            let within = if self.eat_kw("WINDOW") {
                TemporalBound::Window
            } else {
                TemporalBound::Millis(self.duration()?)
            };
            self.expect(Tok::RParen)?;
            if g.temporal.is_some() {
                return self.err("only one TIMESTAMP filter is supported");
            }
            g.temporal = Some(TemporalFilter { var, within });
            return Ok(());
        }
        self.expect(Tok::LParen)?;
        let e = self.filter_expr()?;
        self.expect(Tok::RParen)?;
        g.filters.push(e);
        Ok(())
    }

    fn filter_expr(&mut self) -> Result<FilterExpr, QueryError> {
        let mut lhs = self.and_expr()?;
        while self.eat(&Tok::OrOr) || self.eat_kw("OR") {
            lhs = FilterExpr::Or(Box::new(lhs), Box::new(self.and_expr()?));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<FilterExpr, QueryError> {
        let mut lhs = self.unary_expr()?;
        while self.eat(&Tok::AndAnd) || self.eat_kw("AND") {
            lhs = FilterExpr::And(Box::new(lhs), Box::new(self.unary_expr()?));
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<FilterExpr, QueryError> {
        if self.eat(&Tok::Bang) || self.eat_kw("NOT") {
            return Ok(FilterExpr::Not(Box::new(self.unary_expr()?)));
        }
        if self.eat(&Tok::LParen) {
            let e = self.filter_expr()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        if self.is_kw("strEndsWith") || self.is_kw("STRENDS") {
            self.next();
            self.expect(Tok::LParen)?;
            let operand = self.operand()?;
            self.expect(Tok::Comma)?;
            let suffix = match self.next().tok {
                Tok::Str(s) => s,
                other => {
                    self.pos -= 1;
                    return self.err(format!("expected a string suffix, found {}", describe(&other)));
                }
            };
            self.expect(Tok::RParen)?;
            return Ok(FilterExpr::StrEndsWith(operand, suffix));
        }
        let lhs = self.operand()?;
        let op = match self.next().tok {
            Tok::Eq => CompareOp::Eq,
            Tok::Lt => CompareOp::Lt,
            Tok::Gt => CompareOp::Gt,
            other => {
                self.pos -= 1;
                return self.err(format!("expected =, < or >, found {}", describe(&other)));
            }
        };
        let rhs = self.operand()?;
        Ok(FilterExpr::Compare(op, lhs, rhs))
    }

    fn operand(&mut self) -> Result<Operand, QueryError> {
        match self.peek().clone() {
            Tok::Var(_) => Ok(Operand::Var(self.var()?)),
            Tok::Ident(w) if w.eq_ignore_ascii_case("COUNT") => {
                self.next();
                self.expect(Tok::LParen)?;
                self.eat_kw("DISTINCT");
                let v = self.var()?;
                self.expect(Tok::RParen)?;
                Ok(Operand::Count(v))
            }
            Tok::Iri(_) | Tok::PName(..) => Ok(Operand::Const(Term::Iri(self.iri()?))),
            Tok::Str(_) | Tok::Num(_) => Ok(Operand::Const(self.literal()?)),
            other => self.err(format!("expected an operand, found {}", describe(&other))),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Position {
    Subject,
    Predicate,
    Object,
}

/// `"1.25"` → `(125, 100)`. Negative values are rejected.
fn decimal_ratio(text: &str) -> Option<(u128, u128)> {
    if text.starts_with('-') {
        return None;
    }
    match text.split_once('.') {
        None => Some((text.parse().ok()?, 1)),
        Some((int, frac)) => {
            let den = 10u128.checked_pow(frac.len() as u32)?;
            let num = int.parse::<u128>().ok()?.checked_mul(den)? + frac.parse::<u128>().ok()?;
            Some((num, den))
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(w) => format!("'{w}'"),
        Tok::Var(v) => format!("?{v}"),
        Tok::Iri(i) => format!("<{i}>"),
        Tok::PName(p, l) => format!("{p}:{l}"),
        Tok::Str(s) => format!("{s:?}"),
        Tok::Num(n) => n.clone(),
        Tok::LBrace => "'{'".into(),
        Tok::RBrace => "'}'".into(),
        Tok::LBracket => "'['".into(),
        Tok::RBracket => "']'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Dot => "'.'".into(),
        Tok::Semi => "';'".into(),
        Tok::Comma => "','".into(),
        Tok::Slash => "'/'".into(),
        Tok::OrOr => "'||'".into(),
        Tok::AndAnd => "'&&'".into(),
        Tok::Bang => "'!'".into(),
        Tok::Eq => "'='".into(),
        Tok::Lt => "'<'".into(),
        Tok::Gt => "'>'".into(),
        Tok::DataTag => "'^^'".into(),
        Tok::Eof => "end of input".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "PREFIX ex: <http://example.org/water/>\nPREFIX st: <http://example.org/stream/>\n";

    fn parse(body: &str) -> Result<ContinuousQuery, QueryError> {
        parse_continuous_query(&format!("{HEAD}{body}"))
    }

    fn window_of(q: &ContinuousQuery) -> WindowSpec {
        q.from_streams[0].window
    }

    #[test]
    fn range_and_step_normalize_to_millis() {
        let q = parse("SELECT ?x FROM STREAM st:0 [RANGE 5m STEP 1s] WHERE { ?x ex:p ?y }").unwrap();
        assert_eq!(window_of(&q), WindowSpec::new(300_000, 1000));
    }

    #[test]
    fn equivalent_units_give_equal_windows() {
        let w = |d: &str| {
            window_of(&parse(&format!("SELECT ?x FROM STREAM st:0 [RANGE {d} STEP {d}] WHERE {{ ?x ex:p ?y }}")).unwrap())
        };
        assert_eq!(w("1s"), w("1000ms"));
        assert_eq!(w("1s"), w("1/60 m"));
        assert_eq!(w("1s"), w("0.5 s").with_doubled());
    }

    impl WindowSpec {
        fn with_doubled(self) -> Self {
            WindowSpec::new(self.range.millis().unwrap() * 2, self.step_ms * 2)
        }
    }

    #[test]
    fn step_defaults_to_range() {
        let q = parse("SELECT ?x FROM STREAM st:0 [RANGE 10s] WHERE { ?x ex:p ?y }").unwrap();
        assert_eq!(window_of(&q), WindowSpec::new(10_000, 10_000));
        let q = parse("SELECT ?x FROM STREAM st:0 [RANGE UNBOUNDED] WHERE { ?x ex:p ?y }").unwrap();
        assert_eq!(window_of(&q).range, WindowRange::Unbounded);
    }

    #[test]
    fn bad_durations() {
        let q = |d: &str| parse(&format!("SELECT ?x FROM STREAM st:0 [RANGE {d}] WHERE {{ ?x ex:p ?y }}"));
        assert!(matches!(q("5 fortnights"), Err(QueryError::UnknownUnit { unit, .. }) if unit == "fortnights"));
        assert!(matches!(q("1/3 s"), Err(QueryError::Syntax { .. })));
        assert!(matches!(q("0s"), Err(QueryError::Syntax { .. })));
        assert!(matches!(q("-1s"), Err(QueryError::Syntax { .. })));
    }

    #[test]
    fn unbound_select_variable() {
        assert_eq!(
            parse("SELECT ?x ?z FROM STREAM st:0 [RANGE 1s] WHERE { ?x ex:p ?y }"),
            Err(QueryError::UnboundVariable("z".into()))
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_continuous_query("SELECT ?x\nWHERE { ?x }").unwrap_err();
        assert!(matches!(err, QueryError::Syntax { line: 2, col: 12, .. }), "{err:?}");
        let err = parse("SELECT ?x FROM STREAM st:0 [RANGE 1s] WHERE { ?x foo:p ?y }").unwrap_err();
        assert!(matches!(err, QueryError::Syntax { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn filter_must_follow_patterns() {
        let err = parse(
            "SELECT ?x FROM STREAM st:0 [RANGE 1s] WHERE { FILTER(?x = ?y) ?x ex:p ?y }",
        )
        .unwrap_err();
        assert!(matches!(err, QueryError::Syntax { .. }));
    }

    #[test]
    fn shorthand_and_blocks() {
        let q = parse(
            "SELECT ?o ?l WHERE { STREAM st:1 [RANGE 2s STEP 1s] { ?o ex:fromSensor ?s ; ex:hasId ?i , \"7\" . } \
             STATIC { ?s ex:label ?l } }",
        )
        .unwrap();
        assert_eq!(q.patterns.len(), 4);
        assert_eq!(q.patterns[2].o, PatternTerm::Const(Term::string("7")));
        assert!(q.patterns[3].is_static());
        assert!(matches!(q.patterns[0].source, PatternSource::Stream(sw) if sw.stream == StreamId(1)));
    }

    #[test]
    fn blank_nodes_rejected() {
        assert!(parse("SELECT ?x FROM STREAM st:0 [RANGE 1s] WHERE { _:b ex:p ?x }").is_err());
    }

    #[test]
    fn filter_precedence() {
        let q = parse(
            "SELECT ?x FROM STREAM st:0 [RANGE 1s] WHERE { ?x ex:p ?y FILTER(!strEndsWith(?y, \"a\") || ?y = \"b\" && ?y = \"c\") }",
        )
        .unwrap();
        match &q.filters[0] {
            FilterExpr::Or(a, b) => {
                assert!(matches!(**a, FilterExpr::Not(_)));
                assert!(matches!(**b, FilterExpr::And(..)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decimal_ratio_parses() {
        assert_eq!(decimal_ratio("1.25"), Some((125, 100)));
        assert_eq!(decimal_ratio("60"), Some((60, 1)));
        assert_eq!(decimal_ratio("-1"), None);
    }
}
