//! The benchmark queries shipped with the crate.

use super::{parse_continuous_query, ContinuousQuery, QueryError};

pub const CANONICAL_NAMES: [&str; 7] = ["q1", "q1prime", "q2", "q3", "q4", "q5", "q6"];

/// Source text of a shipped query, by name (`q1` … `q6`, `q1prime`).
pub fn canonical_text(name: &str) -> Option<&'static str> {
    Some(match name.trim_end_matches(".rspq") {
        "q1" => include_str!("../../queries/q1.rspq"),
        "q1prime" => include_str!("../../queries/q1prime.rspq"),
        "q2" => include_str!("../../queries/q2.rspq"),
        "q3" => include_str!("../../queries/q3.rspq"),
        "q4" => include_str!("../../queries/q4.rspq"),
        "q5" => include_str!("../../queries/q5.rspq"),
        "q6" => include_str!("../../queries/q6.rspq"),
        _ => return None,
    })
}

/// Parsed shipped query. Panics on an unknown name; the texts themselves are
/// covered by tests.
pub fn canonical_query(name: &str) -> ContinuousQuery {
    let text = canonical_text(name).unwrap_or_else(|| panic!("no canonical query named {name:?}"));
    parse_continuous_query(text).unwrap_or_else(|e: QueryError| panic!("{name}: {e}"))
}
