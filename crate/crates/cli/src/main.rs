mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rsplab::query::EngineKind;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CAPABILITY: u8 = 3;
pub const EXIT_SATURATED: u8 = 4;
pub const EXIT_MISMATCH: u8 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "rsplab",
    version,
    about = "Time-driven and data-driven RDF stream processing engines, workload generator, oracle and benchmarks",
    after_help = "Exit codes: 0 ok, 1 runtime failure, 2 configuration error, 3 capability rejection, \
                  4 saturated results, 5 oracle mismatch."
)]
pub struct Cli {
    /// Flat `key = value` file with defaults for the subcommand's flags; flags on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a stream log (and optionally static sensor data)
    Gen(GenArgs),
    /// Run an engine over a log or generated stream and write its output as JSON lines
    Run(RunArgs),
    /// Compare recorded engine output with the oracle
    Verify(VerifyArgs),
    /// Sweep a parameter and write a CSV report
    Bench(BenchArgs),
    /// Search the largest stream rate the time-driven engine sustains
    Ratemax(RateMaxArgs),
    /// Memory consumption rate of a memory trace CSV
    Mcr(McrArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of events (7 triples each with the default 3 tags)
    #[arg(long, default_value_t = 1000)]
    pub events: u64,
    #[arg(long, default_value_t = 10)]
    pub sensors: u32,
    /// Tags per observation
    #[arg(long, default_value_t = 3)]
    pub tags: u32,
    /// Distinct tags to draw from
    #[arg(long, default_value_t = 20)]
    pub tag_pool: u32,
    /// Flow observations between two chlorine observations
    #[arg(long, default_value_t = 50)]
    pub flow_per_chlorine: u32,
    /// Stream rate in triples per second
    #[arg(long, default_value_t = 1000.0)]
    pub rate: f64,
    /// Batch emission: timestamps on a virtual grid at this many triples per second (overrides --rate)
    #[arg(long, value_name = "RATE")]
    pub batch: Option<f64>,
    /// Number of streams events are partitioned over
    #[arg(long, default_value_t = 1)]
    pub streams: u32,
    /// How events are assigned to streams
    #[arg(long, default_value = "round-robin", value_parser = ["round-robin", "hash"])]
    pub partition: String,
    /// Put tag triples on stream 1, this many ms after the rest of their event (needs --streams 2)
    #[arg(long, value_name = "MS")]
    pub async_split: Option<u64>,
    /// Timestamp of the first triple, in ms
    #[arg(long, default_value_t = 0)]
    pub start: u64,
    /// Pad the static sensor data to this size in MB
    #[arg(long, value_name = "MB")]
    pub static_mb: Option<f64>,
    /// Stream log output (stdout when absent)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Static sensor data output
    #[arg(long, value_name = "FILE")]
    pub static_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub engine: EngineKind,
    /// Query file; a shipped query name such as q1 is accepted when no such file exists. Repeatable
    #[arg(long, required = true, value_name = "FILE")]
    pub query: Vec<String>,
    /// Stream log to replay
    #[arg(long, value_name = "FILE", conflicts_with = "gen")]
    pub log: Option<PathBuf>,
    /// Generate the stream instead: comma-separated key=value pairs using the names of `gen` flags, e.g. events=300,rate=2000
    #[arg(long, value_name = "SPEC")]
    pub gen: Option<String>,
    /// Static data file
    #[arg(long = "static", value_name = "FILE")]
    pub static_data: Option<PathBuf>,
    /// Seed for the generated stream
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result JSON lines (stdout when absent)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Check the output against the oracle
    #[arg(long)]
    pub verify: bool,
    /// Let the data-driven engine accept TIMESTAMP(?v) WITHIN d
    #[arg(long)]
    pub allow_timestamp_function: bool,
    /// Time-driven: last tick instant in ms (default: one STEP after the last triple)
    #[arg(long, value_name = "MS")]
    pub until: Option<u64>,
    /// Pace the stream in real time with one emitter thread per stream instead of replaying under the virtual clock
    #[arg(long)]
    pub realtime: bool,
    /// Time-driven: multiply measured execution times by this factor
    #[arg(long, default_value_t = 1.0)]
    pub slowdown: f64,
    /// Time-driven: time each execution this many times and keep the fastest
    #[arg(long, default_value_t = 1)]
    pub repeats: u32,
    /// Memory trace CSV output
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Memory sampling interval
    #[arg(long, default_value_t = 100, value_name = "MS")]
    pub sample_interval: u64,
    /// Emission log JSON output
    #[arg(long, value_name = "FILE")]
    pub emission_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Stream log the engine consumed
    #[arg(long, value_name = "FILE")]
    pub log: PathBuf,
    /// Query file or shipped query name
    #[arg(long, value_name = "FILE")]
    pub query: String,
    /// Engine output (JSON lines)
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    /// Static data file
    #[arg(long = "static", value_name = "FILE")]
    pub static_data: Option<PathBuf>,
    /// Accepted for uniformity; verification is deterministic
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Differences to print per kind
    #[arg(long, default_value_t = 20)]
    pub show: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Engine to benchmark
    pub engine: EngineKind,
    /// Query file or shipped query name
    #[arg(long, value_name = "FILE")]
    pub query: String,
    /// Swept parameter: rate, window, streams, static-mb (time-driven) or triples, streams, static-mb (data-driven)
    #[arg(long)]
    pub sweep: String,
    /// Comma-separated values (window in seconds, static size in MB)
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    /// Measured executions (time-driven) or timed passes (data-driven) per point
    #[arg(long, default_value_t = 20)]
    pub iters: usize,
    /// Warm-up in seconds of stream time
    #[arg(long, default_value_t = 90.0)]
    pub warmup: f64,
    /// CSV report output (stdout when absent)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stream rate in triples per second when not swept
    #[arg(long, default_value_t = 1000.0)]
    pub rate: f64,
    /// Window range in seconds when not swept (default: the query's own)
    #[arg(long, value_name = "SECONDS")]
    pub range: Option<f64>,
    /// Triples per data-driven run when not swept
    #[arg(long, default_value_t = 10_000)]
    pub triples: u64,
    #[arg(long, default_value_t = 1)]
    pub streams: u32,
    #[arg(long, value_name = "MB")]
    pub static_mb: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub sensors: u32,
    /// Tags per observation
    #[arg(long, default_value_t = 3)]
    pub tags: u32,
    /// Time-driven: multiply measured execution times by this factor
    #[arg(long, default_value_t = 1.0)]
    pub slowdown: f64,
    /// Time-driven: time each execution this many times and keep the fastest
    #[arg(long, default_value_t = 1)]
    pub repeats: u32,
    /// Time-driven: use a deterministic cost of BASE_MS + PER_TRIPLE_MS per buffered triple
    #[arg(long, value_name = "BASE_MS,PER_TRIPLE_MS")]
    pub synthetic_cost: Option<String>,
    /// Largest log handed to the oracle; 0 disables correctness checks
    #[arg(long, default_value_t = 20_000)]
    pub check_limit: usize,
    /// Write each grid point's memory trace here as trace-<value>.csv
    #[arg(long, value_name = "DIR")]
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateMaxArgs {
    /// Query file or shipped query name
    #[arg(long, value_name = "FILE")]
    pub query: String,
    /// Execution period in seconds
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Lower rate bound; must sustain
    #[arg(long)]
    pub lo: f64,
    /// Upper rate bound; must overrun
    #[arg(long)]
    pub hi: f64,
    /// Relative width of the final bracket
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Multiply measured execution times by this factor
    #[arg(long, default_value_t = 100.0)]
    pub slowdown: f64,
    /// Time each execution this many times and keep the fastest
    #[arg(long, default_value_t = 3)]
    pub repeats: u32,
    /// Probe the closed-form stub with execution time C * rate * step instead of the engine
    #[arg(long, value_name = "C")]
    pub stub_c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct McrArgs {
    /// Memory trace CSV with columns t_ms,bytes
    #[arg(long, value_name = "FILE")]
    pub trace: PathBuf,
    /// Accepted for uniformity; the estimate is deterministic
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }

    fn kind(&self) -> &'static str {
        match self.code {
            EXIT_CONFIG => "config",
            EXIT_CAPABILITY => "capability",
            EXIT_SATURATED => "saturated",
            EXIT_MISMATCH => "mismatch",
            _ => "runtime",
        }
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Run(a) => commands::run(a),
        Command::Verify(a) => commands::verify(a),
        Command::Bench(a) => commands::bench(a),
        Command::Ratemax(a) => commands::ratemax(a),
        Command::Mcr(a) => commands::mcr(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => report(e),
    }
}

/// Prints a one-line JSON diagnostic on stderr.
fn report(e: CliError) -> ExitCode {
    let diag = serde_json::json!({ "error": e.kind(), "code": e.code, "message": e.message });
    eprintln!("{diag}");
    ExitCode::from(e.code)
}
