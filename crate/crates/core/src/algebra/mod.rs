//! Evaluation core shared by both engines: window buffers, binding tables,
//! pattern matching, joins, filters and aggregation.

mod eval;
mod plan;
mod table;
mod window;

pub use eval::{eval_filter, evaluate, finalize, group_answer, match_bgp, Answer, AnswerSet, PatternInput};
pub use plan::{CompiledFilter, CompiledOperand, CompiledPattern, CompiledSelect, QueryPlan, Slot};
pub use table::{join_tables, BindingTable, UNBOUND};
pub use window::WindowBuffer;

use crate::rdf::{RdfError, StreamId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("out-of-order arrival on stream {stream}: t={t} after t={last}")]
    OutOfOrder { stream: StreamId, t: u64, last: u64 },
    #[error("triple for stream {got} offered to the buffer of stream {expected}")]
    WrongStream { expected: StreamId, got: StreamId },
    #[error("type error: {0}")]
    Type(String),
    #[error(transparent)]
    Rdf(#[from] RdfError),
}
