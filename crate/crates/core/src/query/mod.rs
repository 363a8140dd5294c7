//! Continuous-query language: AST, parser, serializer, validation and
//! engine capability checks.

mod ast;
mod canonical;
mod capability;
mod lexer;
mod parser;
mod serialize;
mod validate;

pub use ast::*;
pub use canonical::{canonical_query, canonical_text, CANONICAL_NAMES};
pub use capability::{capability_check, CapabilityReport, EngineKind, Feature, Support};
pub use parser::parse_continuous_query;
pub use serialize::format_duration;
pub use validate::validate;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unknown duration unit {unit:?} at {line}:{col}")]
    UnknownUnit {
        unit: String,
        line: usize,
        col: usize,
    },
    #[error("variable ?{0} is not bound by any pattern")]
    UnboundVariable(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("invalid query: {0}")]
    Invalid(String),
}
