//! Line-oriented triple formats.
//!
//! Triple documents hold one `<s> <p> <o> .` per line; literals are double
//! quoted with an optional `^^<datatype>`, blank nodes use `_:label`, and a
//! line starting with `#` is a comment. Stream logs prefix every triple with
//! two columns: `t_millis stream_id <s> <p> <o> .`

use std::io::{self, Write};

use super::{
    Datatype, Dictionary, RdfError, StaticGraph, StreamId, Term, TimestampedTriple, Triple,
};

struct Cursor<'a> {
    rest: &'a str,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn eat(&mut self, prefix: &str) -> bool {
        if let Some(r) = self.rest.strip_prefix(prefix) {
            self.rest = r;
            true
        } else {
            false
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        let end = self
            .rest
            .find('>')
            .ok_or_else(|| "unterminated IRI".to_string())?;
        let iri = &self.rest[..end];
        if iri.is_empty() {
            return Err("empty IRI".into());
        }
        if iri.chars().any(|c| c.is_whitespace() || c == '<') {
            return Err(format!("invalid character in IRI <{iri}>"));
        }
        self.rest = &self.rest[end + 1..];
        Ok(iri.to_string())
    }

    fn term(&mut self) -> Result<Term, String> {
        self.skip_ws();
        if self.eat("<") {
            return self.iri().map(Term::Iri);
        }
        if self.eat("_:") {
            let end = self
                .rest
                .find(|c: char| c.is_whitespace())
                .unwrap_or(self.rest.len());
            let label = &self.rest[..end];
            if label.is_empty() {
                return Err("empty blank node label".into());
            }
            self.rest = &self.rest[end..];
            return Ok(Term::BlankNode(label.to_string()));
        }
        if self.eat("\"") {
            let mut lexical = String::new();
            let mut chars = self.rest.char_indices();
            let close = loop {
                match chars.next() {
                    None => return Err("unterminated literal".into()),
                    Some((i, '"')) => break i,
                    Some((_, '\\')) => match chars.next() {
                        Some((_, '"')) => lexical.push('"'),
                        Some((_, '\\')) => lexical.push('\\'),
                        Some((_, 'n')) => lexical.push('\n'),
                        Some((_, 'r')) => lexical.push('\r'),
                        Some((_, 't')) => lexical.push('\t'),
                        Some((_, c)) => return Err(format!("unsupported escape \\{c}")),
                        None => return Err("unterminated literal".into()),
                    },
                    Some((_, c)) => lexical.push(c),
                }
            };
            self.rest = &self.rest[close + 1..];
            let datatype = if self.eat("^^<") {
                let iri = self.iri()?;
                Datatype::from_iri(&iri).ok_or_else(|| format!("unsupported datatype <{iri}>"))?
            } else if self.rest.starts_with('@') {
                return Err("language tags are not supported".into());
            } else {
                Datatype::String
            };
            return Ok(Term::Literal { lexical, datatype });
        }
        Err(format!(
            "expected a term, found {:?}",
            self.rest.chars().next().map_or(String::from("end of line"), String::from)
        ))
    }

    fn word(&mut self) -> Result<&'a str, String> {
        self.skip_ws();
        let end = self
            .rest
            .find(|c: char| c.is_whitespace())
            .unwrap_or(self.rest.len());
        if end == 0 {
            return Err("unexpected end of line".into());
        }
        let w = &self.rest[..end];
        self.rest = &self.rest[end..];
        Ok(w)
    }

    fn finish(&mut self) -> Result<(), String> {
        self.skip_ws();
        if !self.eat(".") {
            return Err("expected '.' after object".into());
        }
        self.skip_ws();
        if !self.rest.is_empty() && !self.rest.starts_with('#') {
            return Err(format!("trailing content {:?}", self.rest));
        }
        Ok(())
    }
}

fn is_blank(line: &str) -> bool {
    let l = line.trim_start();
    l.is_empty() || l.starts_with('#')
}

/// Parses one document line. Blank and comment lines yield `None`.
pub fn parse_triple_line(line: &str) -> Result<Option<[Term; 3]>, String> {
    if is_blank(line) {
        return Ok(None);
    }
    let mut c = Cursor { rest: line };
    let s = c.term()?;
    let p = c.term()?;
    let o = c.term()?;
    c.finish()?;
    check_positions(&s, &p)?;
    Ok(Some([s, p, o]))
}

/// Parses one stream-log line into `(t, stream, [s, p, o])`.
pub fn parse_log_line(line: &str) -> Result<Option<(u64, StreamId, [Term; 3])>, String> {
    if is_blank(line) {
        return Ok(None);
    }
    let mut c = Cursor { rest: line };
    let t = c.word()?;
    let t: u64 = t.parse().map_err(|_| format!("invalid timestamp {t:?}"))?;
    let stream = c.word()?;
    let stream: u32 = stream
        .parse()
        .map_err(|_| format!("invalid stream id {stream:?}"))?;
    let s = c.term()?;
    let p = c.term()?;
    let o = c.term()?;
    c.finish()?;
    check_positions(&s, &p)?;
    Ok(Some((t, StreamId(stream), [s, p, o])))
}

fn check_positions(s: &Term, p: &Term) -> Result<(), String> {
    if s.is_literal() {
        return Err("literal in subject position".into());
    }
    if !matches!(p, Term::Iri(_)) {
        return Err("predicate must be an IRI".into());
    }
    Ok(())
}

/// Parses a single term written in N-Triples syntax.
pub fn parse_term(text: &str) -> Result<Term, String> {
    let mut c = Cursor { rest: text };
    let term = c.term()?;
    c.skip_ws();
    if !c.rest.is_empty() {
        return Err(format!("trailing content {:?}", c.rest));
    }
    Ok(term)
}

fn intern_triple(dict: &Dictionary, [s, p, o]: &[Term; 3]) -> Triple {
    Triple::new(dict.intern(s), dict.intern(p), dict.intern(o))
}

pub fn parse_document(text: &str, dict: &Dictionary) -> Result<Vec<Triple>, RdfError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_triple_line(line) {
            Ok(Some(terms)) => out.push(intern_triple(dict, &terms)),
            Ok(None) => {}
            Err(message) => return Err(RdfError::Parse { line: i + 1, message }),
        }
    }
    Ok(out)
}

/// Loads a triple document into an indexed [`StaticGraph`].
pub fn load_static_graph(text: &str, dict: &Dictionary) -> Result<StaticGraph, RdfError> {
    Ok(StaticGraph::from_triples(parse_document(text, dict)?))
}

/// Parses a stream log. Timestamps must not decrease within a stream.
pub fn parse_stream_log(text: &str, dict: &Dictionary) -> Result<Vec<TimestampedTriple>, RdfError> {
    let mut out = Vec::new();
    let mut last: rustc_hash::FxHashMap<StreamId, u64> = Default::default();
    for (i, line) in text.lines().enumerate() {
        match parse_log_line(line) {
            Ok(Some((t, stream, terms))) => {
                let prev = last.entry(stream).or_insert(t);
                if t < *prev {
                    return Err(RdfError::Parse {
                        line: i + 1,
                        message: format!("timestamp {t} precedes {prev} on stream {stream}"),
                    });
                }
                *prev = t;
                out.push(TimestampedTriple::new(intern_triple(dict, &terms), t, stream));
            }
            Ok(None) => {}
            Err(message) => return Err(RdfError::Parse { line: i + 1, message }),
        }
    }
    Ok(out)
}

pub fn write_triple(w: &mut impl Write, dict: &Dictionary, t: &Triple) -> io::Result<()> {
    let r = |id| dict.resolve(id).map_err(io::Error::other);
    writeln!(w, "{} {} {} .", r(t.s)?, r(t.p)?, r(t.o)?)
}

pub fn write_log_line(w: &mut impl Write, dict: &Dictionary, tt: &TimestampedTriple) -> io::Result<()> {
    write!(w, "{} {} ", tt.t, tt.stream)?;
    write_triple(w, dict, &tt.triple)
}

pub fn render_log(dict: &Dictionary, log: &[TimestampedTriple]) -> String {
    let mut buf = Vec::with_capacity(log.len() * 96);
    for tt in log {
        write_log_line(&mut buf, dict, tt).expect("writing to a Vec cannot fail");
    }
    String::from_utf8(buf).expect("terms are valid UTF-8")
}
