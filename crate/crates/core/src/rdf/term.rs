use std::fmt;

pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";

/// Literal datatypes understood by the engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Datatype {
    String,
    Integer,
    Decimal,
}

impl Datatype {
    pub fn iri(self) -> &'static str {
        match self {
            Datatype::String => XSD_STRING,
            Datatype::Integer => XSD_INTEGER,
            Datatype::Decimal => XSD_DECIMAL,
        }
    }

    pub fn from_iri(iri: &str) -> Option<Self> {
        match iri {
            XSD_STRING => Some(Datatype::String),
            XSD_INTEGER => Some(Datatype::Integer),
            XSD_DECIMAL => Some(Datatype::Decimal),
            _ => None,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Datatype::Integer | Datatype::Decimal)
    }
}

/// An RDF term. Equality covers kind, lexical form and datatype.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Literal { lexical: String, datatype: Datatype },
    BlankNode(String),
}

impl Term {
    /// Builds an IRI term. Panics on an empty IRI; parsers reject those before
    /// reaching this point.
    pub fn iri(iri: impl Into<String>) -> Self {
        let iri = iri.into();
        assert!(!iri.is_empty(), "IRI must not be empty");
        Term::Iri(iri)
    }

    pub fn string(lexical: impl Into<String>) -> Self {
        Term::Literal {
            lexical: lexical.into(),
            datatype: Datatype::String,
        }
    }

    pub fn integer(value: i64) -> Self {
        Term::Literal {
            lexical: value.to_string(),
            datatype: Datatype::Integer,
        }
    }

    pub fn blank(label: impl Into<String>) -> Self {
        Term::BlankNode(label.into())
    }

    pub fn lexical(&self) -> &str {
        match self {
            Term::Iri(s) | Term::BlankNode(s) => s,
            Term::Literal { lexical, .. } => lexical,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal { .. })
    }

    /// The string value when the term is a string literal.
    pub fn as_str_literal(&self) -> Option<&str> {
        match self {
            Term::Literal {
                lexical,
                datatype: Datatype::String,
            } => Some(lexical),
            _ => None,
        }
    }

    /// Numeric value of an integer or decimal literal.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Term::Literal { lexical, datatype } if datatype.is_numeric() => lexical.parse().ok(),
            _ => None,
        }
    }

    /// Rough heap + inline footprint, used by the memory counters.
    pub fn approx_bytes(&self) -> usize {
        std::mem::size_of::<Term>() + self.lexical().len()
    }
}

pub(crate) fn escape_literal(out: &mut impl fmt::Write, s: &str) -> fmt::Result {
    for c in s.chars() {
        match c {
            '"' => out.write_str("\\\"")?,
            '\\' => out.write_str("\\\\")?,
            '\n' => out.write_str("\\n")?,
            '\r' => out.write_str("\\r")?,
            '\t' => out.write_str("\\t")?,
            c => out.write_char(c)?,
        }
    }
    Ok(())
}

/// N-Triples rendering.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::BlankNode(label) => write!(f, "_:{label}"),
            Term::Literal { lexical, datatype } => {
                f.write_str("\"")?;
                escape_literal(f, lexical)?;
                f.write_str("\"")?;
                match datatype {
                    Datatype::String => Ok(()),
                    other => write!(f, "^^<{}>", other.iri()),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_includes_datatype() {
        let a = Term::Literal {
            lexical: "3".into(),
            datatype: Datatype::Integer,
        };
        let b = Term::string("3");
        assert_ne!(a, b);
        assert_eq!(a, Term::integer(3));
        assert_ne!(Term::iri("x"), Term::blank("x"));
    }

    #[test]
    fn display_is_ntriples() {
        assert_eq!(Term::iri("http://a/b").to_string(), "<http://a/b>");
        assert_eq!(Term::string("a\"b").to_string(), "\"a\\\"b\"");
        assert_eq!(
            Term::integer(7).to_string(),
            format!("\"7\"^^<{XSD_INTEGER}>")
        );
    }

    #[test]
    #[should_panic]
    fn empty_iri_panics() {
        Term::iri("");
    }
}
