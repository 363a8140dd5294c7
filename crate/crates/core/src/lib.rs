//! A small RDF stream processing laboratory: a time-driven and a data-driven
//! continuous-query engine over one shared algebra, a workload generator, a
//! brute-force oracle and a benchmark harness.

pub mod algebra;
pub mod bench;
pub mod engine;
pub mod generator;
pub mod oracle;
pub mod query;
pub mod rdf;
