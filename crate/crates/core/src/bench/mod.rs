//! Benchmark harness: parameter sweeps over both engines, Rate_max probing,
//! memory tracing and the memory consumption rate, and CSV reports.

mod harness;
mod mcr;
mod memory;
mod ratemax;
mod stats;

pub use harness::{
    run, run_data_driven, run_time_driven, BenchReport, BenchRow, ExperimentSpec, RowVerdict, SweepParam,
};
pub use mcr::{compute_mcr, McrEstimate, MemorySample, MemoryTrace, Sawtooth, BYTES_PER_MB, MCR_PERIODS};
pub use memory::{MemorySampler, VirtualSampler, DEFAULT_SAMPLE_INTERVAL_MS};
pub use ratemax::{find_rate_max, EngineProbe, ProbeOutcome, RateMax, RateProbe, StubProbe};
pub use stats::{mean, ols, per_triple_time, LinearFit};

use crate::engine::EngineError;
use crate::generator::GenError;
use crate::oracle::OracleError;
use crate::rdf::RdfError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("bracket invalid: {0}")]
    BracketInvalid(String),
    #[error("no periodic activity: found {peaks} peaks, need {MCR_PERIODS}")]
    NoPeriodicity { peaks: usize },
    #[error("invalid memory trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Rdf(#[from] RdfError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
