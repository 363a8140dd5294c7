//! RDF data model: terms, the shared dictionary, triples, stream elements and
//! static graphs.

mod dictionary;
pub mod ntriples;
mod static_graph;
mod term;
mod triple;

pub use dictionary::{Dictionary, TermId};
pub use ntriples::{load_static_graph, parse_document, parse_stream_log};
pub use static_graph::StaticGraph;
pub use term::{Datatype, Term, XSD_DECIMAL, XSD_INTEGER, XSD_STRING};
pub use triple::{StreamId, TimestampedTriple, Triple, STREAM_IRI_BASE};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RdfError {
    #[error("unknown term id {0}")]
    UnknownId(u32),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
