//! The two engines under test and the records they emit.
//!
//! [`TimeDrivenEngine`] buffers arrivals and evaluates every registered query
//! on its STEP grid, reporting complete answer sets. [`DataDrivenEngine`]
//! evaluates eagerly on every arrival and reports only answers it has not
//! emitted before.

mod data_driven;
mod time_driven;

use serde::{Deserialize, Serialize};

pub use data_driven::{DataDrivenConfig, DataDrivenEngine, IstreamDelta};
pub use time_driven::{CostModel, ExecutionResult, TimeDrivenConfig, TimeDrivenEngine, WallClockRunner};

use crate::algebra::{AlgebraError, Answer, AnswerSet};
use crate::query::{EngineKind, Feature};
use crate::rdf::{Dictionary, RdfError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueryId(pub usize);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("the {engine} engine does not support {features:?}")]
    CapabilityRejected { engine: EngineKind, features: Vec<Feature> },
    #[error("query has no stream pattern")]
    AllStatic,
    #[error("windows of one query must share a STEP")]
    MixedSteps,
    #[error("tick at {now} precedes the previous tick at {previous}")]
    TickBackwards { now: u64, previous: u64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl From<RdfError> for EngineError {
    fn from(e: RdfError) -> Self {
        EngineError::Algebra(e.into())
    }
}

/// Renders an answer as N-Triples terms.
pub fn render_answer(answer: &Answer, dict: &Dictionary) -> Result<Vec<String>, RdfError> {
    answer
        .iter()
        .map(|&id| dict.resolve(id).map(|t| t.to_string()))
        .collect()
}

/// Renders and sorts an answer set so output does not depend on id order.
pub fn render_answers(answers: &AnswerSet, dict: &Dictionary) -> Result<Vec<Vec<String>>, RdfError> {
    let mut out = answers
        .iter()
        .map(|a| render_answer(a, dict))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort();
    Ok(out)
}

/// One line of the time-driven result stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub query: String,
    pub exec_instant: u64,
    pub answers: Vec<Vec<String>>,
    pub exec_ms: f64,
    pub probe_count: u64,
    pub overrun: bool,
}

/// One line of the data-driven delta stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub query: String,
    pub trigger_t: u64,
    pub new_answers: Vec<Vec<String>>,
    pub probe_count: u64,
}

/// Either kind of engine output line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutputRecord {
    Execution(ExecutionRecord),
    Delta(DeltaRecord),
}
