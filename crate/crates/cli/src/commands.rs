use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rsplab::bench::{
    compute_mcr, find_rate_max, run as run_bench, BenchError, EngineProbe, ExperimentSpec, MemorySampler,
    MemoryTrace, RateProbe, StubProbe, SweepParam, VirtualSampler,
};
use rsplab::engine::{
    CostModel, DataDrivenConfig, DataDrivenEngine, EngineError, OutputRecord, TimeDrivenConfig, TimeDrivenEngine,
    WallClockRunner,
};
use rsplab::generator::{
    emit_streams, generate_log, generate_static, split_by_stream, Emission, EmissionLog, GenError,
    GeneratorConfig, Pacing, Partition,
};
use rsplab::oracle::{verify_output, Oracle, OracleError, OracleVerdict, ORACLE_CAP};
use rsplab::query::{canonical_text, parse_continuous_query, ContinuousQuery, EngineKind};
use rsplab::rdf::{load_static_graph, ntriples::render_log, parse_stream_log, Dictionary, StaticGraph, TimestampedTriple};

use crate::{
    BenchArgs, CliError, GenArgs, McrArgs, RateMaxArgs, RunArgs, VerifyArgs, EXIT_CAPABILITY, EXIT_MISMATCH,
    EXIT_SATURATED,
};

type Outcome = Result<u8, CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", path.display())))
}

/// Writer for an optional path, stdout otherwise.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::runtime(format!("write failed: {e}"))
}

fn engine_err(e: EngineError) -> CliError {
    match e {
        EngineError::CapabilityRejected { .. } => CliError {
            code: EXIT_CAPABILITY,
            message: e.to_string(),
        },
        EngineError::AllStatic | EngineError::MixedSteps => CliError::config(e.to_string()),
        other => CliError::runtime(other.to_string()),
    }
}

fn bench_err(e: BenchError) -> CliError {
    match e {
        BenchError::Engine(e) => engine_err(e),
        BenchError::Spec(_) | BenchError::BracketInvalid(_) | BenchError::Generator(GenError::Config(_)) => {
            CliError::config(e.to_string())
        }
        BenchError::Trace(_) | BenchError::Csv(_) => CliError::config(e.to_string()),
        other => CliError::runtime(other.to_string()),
    }
}

fn oracle_err(e: OracleError) -> CliError {
    match e {
        OracleError::TooLarge { .. } | OracleError::Output(_) | OracleError::Alignment(_) => {
            CliError::config(e.to_string())
        }
        other => CliError::runtime(other.to_string()),
    }
}

/// A query file, or a shipped query when no file of that name exists.
fn load_query(arg: &str) -> Result<ContinuousQuery, CliError> {
    let path = Path::new(arg);
    let text = if path.exists() {
        read(path)?
    } else {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
        match canonical_text(stem) {
            Some(t) => t.to_string(),
            None => return Err(CliError::config(format!("query file {arg} not found"))),
        }
    };
    parse_continuous_query(&text).map_err(|e| CliError::config(format!("{arg}: {e}")))
}

fn query_name(q: &ContinuousQuery, index: usize) -> String {
    q.name.clone().unwrap_or_else(|| format!("query{index}"))
}

fn partition(name: &str) -> Result<Partition, CliError> {
    match name {
        "round-robin" => Ok(Partition::RoundRobin),
        "hash" => Ok(Partition::Hash),
        other => Err(CliError::config(format!("unknown partition {other:?}"))),
    }
}

fn generator_config(a: &GenArgs) -> Result<GeneratorConfig, CliError> {
    let cfg = GeneratorConfig {
        seed: a.seed,
        n_sensors: a.sensors,
        tags_per_observation: a.tags,
        tag_pool: a.tag_pool,
        flow_per_chlorine: a.flow_per_chlorine,
        emission: match a.batch {
            Some(virtual_rate) => Emission::Batch { virtual_rate },
            None => Emission::Rate(a.rate),
        },
        start_ms: a.start,
        n_streams: a.streams,
        partition: partition(&a.partition)?,
        async_split_ms: a.async_split,
        ..GeneratorConfig::default()
    };
    cfg.validate().map_err(|e| CliError::config(e.to_string()))?;
    Ok(cfg)
}

fn static_bytes(mb: Option<f64>) -> Result<Option<usize>, CliError> {
    match mb {
        Some(m) if !(m.is_finite() && m >= 0.0) => Err(CliError::config(format!("invalid static size {m}"))),
        Some(m) => Ok(Some((m * 1e6) as usize)),
        None => Ok(None),
    }
}

pub fn gen(a: GenArgs) -> Outcome {
    let cfg = generator_config(&a)?;
    let bytes = static_bytes(a.static_mb)?;
    if bytes.is_some() && a.static_out.is_none() {
        return Err(CliError::config("--static-mb needs --static-out"));
    }
    let dict = Dictionary::new();
    let log = generate_log(&cfg, a.events, &dict);
    let mut out = sink(a.out.as_deref())?;
    out.write_all(render_log(&dict, &log).as_bytes()).map_err(io_err)?;
    out.flush().map_err(io_err)?;
    if let Some(path) = &a.static_out {
        let mut w = create(path)?;
        w.write_all(generate_static(&cfg, bytes).as_bytes()).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }
    Ok(0)
}

/// `--gen events=300,rate=2000,...` parsed through the `gen` flags.
fn parse_gen_spec(spec: &str, seed: u64) -> Result<GenArgs, CliError> {
    use clap::Parser;
    #[derive(Parser)]
    struct Wrapper {
        #[command(flatten)]
        args: GenArgs,
    }
    let mut argv = vec!["--gen".to_string(), "--seed".to_string(), seed.to_string()];
    for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--gen: expected key=value, got {pair:?}")))?;
        if matches!(k.trim(), "out" | "static-out") {
            return Err(CliError::config(format!("--gen: {k} is not a stream setting")));
        }
        argv.push(format!("--{}", k.trim()));
        argv.push(v.trim().to_string());
    }
    Wrapper::try_parse_from(argv)
        .map(|w| w.args)
        .map_err(|e| CliError::config(format!("--gen: {}", e.kind())))
}

struct Input {
    dict: Arc<Dictionary>,
    static_graph: Arc<StaticGraph>,
    log: Vec<TimestampedTriple>,
}

fn load_input(a: &RunArgs) -> Result<Input, CliError> {
    let dict = Dictionary::shared();
    let (log, generated) = match (&a.log, &a.gen) {
        (Some(path), None) => {
            let text = read(path)?;
            let log = parse_stream_log(&text, &dict).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            (log, None)
        }
        (None, Some(spec)) => {
            let g = parse_gen_spec(spec, a.seed)?;
            let cfg = generator_config(&g)?;
            (generate_log(&cfg, g.events, &dict), Some((cfg, g.static_mb)))
        }
        _ => return Err(CliError::config("one of --log or --gen is required")),
    };
    let static_graph = match (&a.static_data, generated) {
        (Some(path), _) => {
            let text = read(path)?;
            load_static_graph(&text, &dict).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        }
        (None, Some((cfg, mb))) => load_static_graph(&generate_static(&cfg, static_bytes(mb)?), &dict)
            .map_err(|e| CliError::runtime(e.to_string()))?,
        (None, None) => StaticGraph::default(),
    };
    Ok(Input {
        dict,
        static_graph: Arc::new(static_graph),
        log,
    })
}

fn max_step(queries: &[ContinuousQuery]) -> u64 {
    queries
        .iter()
        .flat_map(|q| q.stream_windows())
        .map(|w| w.window.step_ms)
        .max()
        .unwrap_or(1000)
}

struct RunOutput {
    records: Vec<OutputRecord>,
    overrun: bool,
    trace: MemoryTrace,
    emission: Vec<EmissionLog>,
}

pub fn run(a: RunArgs) -> Outcome {
    let queries = a.query.iter().map(|q| load_query(q)).collect::<Result<Vec<_>, _>>()?;
    if !(a.slowdown.is_finite() && a.slowdown > 0.0) {
        return Err(CliError::config("--slowdown must be positive"));
    }
    if a.repeats == 0 {
        return Err(CliError::config("--repeats must be at least 1"));
    }
    if a.sample_interval == 0 {
        return Err(CliError::config("--sample-interval must be positive"));
    }
    if a.verify {
        if let Some(path) = &a.log {
            // Fail before running rather than after.
            let lines = read(path)?.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).count();
            if lines > ORACLE_CAP {
                return Err(CliError::config(format!("--verify accepts logs of at most {ORACLE_CAP} triples")));
            }
        }
    }
    let input = load_input(&a)?;
    let out = match (a.engine, a.realtime) {
        (EngineKind::TimeDriven, false) => run_time_driven_virtual(&a, &queries, &input)?,
        (EngineKind::TimeDriven, true) => run_time_driven_realtime(&a, &queries, &input)?,
        (EngineKind::DataDriven, false) => run_data_driven_virtual(&a, &queries, &input)?,
        (EngineKind::DataDriven, true) => run_data_driven_realtime(&a, &queries, &input)?,
    };

    let mut w = sink(a.out.as_deref())?;
    for r in &out.records {
        serde_json::to_writer(&mut w, r).map_err(|e| CliError::runtime(e.to_string()))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    if let Some(path) = &a.trace {
        out.trace.write_csv(create(path)?).map_err(bench_err)?;
    }
    if let Some(path) = &a.emission_log {
        let mut f = create(path)?;
        serde_json::to_writer_pretty(&mut f, &out.emission).map_err(|e| CliError::runtime(e.to_string()))?;
        f.flush().map_err(io_err)?;
    }

    let mut code = 0;
    if out.overrun {
        eprintln!("saturated: at least one execution overran its STEP");
        code = EXIT_SATURATED;
    }
    if a.verify {
        let oracle = Oracle::new(&input.log, &input.dict, &input.static_graph).map_err(oracle_err)?;
        for (i, q) in queries.iter().enumerate() {
            let v = verify_output(&oracle, q, &query_name(q, i), &out.records).map_err(oracle_err)?;
            print_verdict(&v, 20, &mut std::io::stderr()).map_err(io_err)?;
            if !v.is_exact() {
                code = EXIT_MISMATCH;
            }
        }
    }
    Ok(code)
}

fn emission_of(log: &[TimestampedTriple], wall: Duration) -> EmissionLog {
    EmissionLog {
        count: log.len(),
        wall,
        first_t: log.first().map(|t| t.t),
        last_t: log.last().map(|t| t.t),
    }
}

fn time_driven_engine(a: &RunArgs, queries: &[ContinuousQuery], input: &Input) -> Result<(TimeDrivenEngine, u64), CliError> {
    let config = TimeDrivenConfig {
        cost: CostModel::Measured { slowdown: a.slowdown, repeats: a.repeats },
    };
    let mut engine = TimeDrivenEngine::new(Arc::clone(&input.dict), Arc::clone(&input.static_graph), config);
    let t0 = input.log.iter().map(|t| t.t).min().unwrap_or(0);
    for q in queries {
        engine.register_query(q, t0).map_err(engine_err)?;
    }
    let last = input.log.iter().map(|t| t.t).max().unwrap_or(t0);
    let until = a.until.unwrap_or(last + max_step(queries));
    if until < last {
        return Err(CliError::config(format!("--until {until} precedes the last triple at {last}")));
    }
    Ok((engine, until))
}

fn data_driven_engine(a: &RunArgs, queries: &[ContinuousQuery], input: &Input) -> Result<DataDrivenEngine, CliError> {
    let config = DataDrivenConfig {
        allow_timestamp_function: a.allow_timestamp_function,
    };
    let mut engine = DataDrivenEngine::new(Arc::clone(&input.dict), Arc::clone(&input.static_graph), config);
    for q in queries {
        engine.register_query(q).map_err(engine_err)?;
    }
    Ok(engine)
}

fn run_time_driven_virtual(a: &RunArgs, queries: &[ContinuousQuery], input: &Input) -> Result<RunOutput, CliError> {
    let (mut engine, until) = time_driven_engine(a, queries, input)?;
    let mut sampler = VirtualSampler::new(a.sample_interval);
    let mut results = Vec::new();
    let started = Instant::now();
    for tt in &input.log {
        if engine.next_due().is_some_and(|d| d < tt.t) {
            results.extend(engine.tick(tt.t - 1).map_err(engine_err)?);
        }
        sampler.advance(tt.t, || engine.approx_bytes());
        engine.push(*tt).map_err(engine_err)?;
    }
    results.extend(engine.tick(until).map_err(engine_err)?);
    let wall = started.elapsed();
    let trace = sampler.finish(until, || engine.approx_bytes());
    let records = results
        .iter()
        .map(|r| r.record(&input.dict).map(OutputRecord::Execution))
        .collect::<Result<Vec<_>, _>>()
        .map_err(engine_err)?;
    Ok(RunOutput {
        overrun: results.iter().any(|r| r.overrun),
        records,
        trace,
        emission: vec![emission_of(&input.log, wall)],
    })
}

fn run_data_driven_virtual(a: &RunArgs, queries: &[ContinuousQuery], input: &Input) -> Result<RunOutput, CliError> {
    let mut engine = data_driven_engine(a, queries, input)?;
    let mut sampler = VirtualSampler::new(a.sample_interval);
    let mut records = Vec::new();
    let started = Instant::now();
    for tt in &input.log {
        sampler.advance(tt.t, || engine.approx_bytes());
        for d in engine.on_arrival(*tt).map_err(engine_err)? {
            if !d.new_answers.is_empty() {
                records.push(OutputRecord::Delta(d.record(&input.dict).map_err(engine_err)?));
            }
        }
    }
    let wall = started.elapsed();
    let end = input.log.last().map_or(0, |t| t.t);
    Ok(RunOutput {
        records,
        overrun: false,
        trace: sampler.finish(end, || engine.approx_bytes()),
        emission: vec![emission_of(&input.log, wall)],
    })
}

const SINK_TIMEOUT: Duration = Duration::from_secs(10);

fn run_time_driven_realtime(a: &RunArgs, queries: &[ContinuousQuery], input: &Input) -> Result<RunOutput, CliError> {
    let (engine, until) = time_driven_engine(a, queries, input)?;
    let t0 = input.log.iter().map(|t| t.t).min().unwrap_or(0);
    let (tx, rx) = mpsc::channel();
    let runner = WallClockRunner::start(engine, t0, tx);
    let handle = Arc::clone(runner.engine());
    let sampler = MemorySampler::start(Duration::from_millis(a.sample_interval), move || {
        handle.lock().expect("engine lock").approx_bytes()
    });
    let parts = split_by_stream(&input.log);
    let sinks: Vec<_> = parts
        .iter()
        .map(|_| {
            let r = &runner;
            move |tt: TimestampedTriple| {
                r.push(tt).map(|_| ()).map_err(|e| GenError::Rejected(e.to_string()))
            }
        })
        .collect();
    let emitted = emit_streams(parts, sinks, Pacing::RealTime, SINK_TIMEOUT);
    while runner.now() < until {
        std::thread::sleep(Duration::from_millis(5).min(Duration::from_millis(until - runner.now())));
    }
    let trace = sampler.stop();
    runner.stop().map_err(engine_err)?;
    let emission = emitted.map_err(|e| CliError::runtime(e.to_string()))?;
    let results: Vec<_> = rx.try_iter().collect();
    let records = results
        .iter()
        .map(|r| r.record(&input.dict).map(OutputRecord::Execution))
        .collect::<Result<Vec<_>, _>>()
        .map_err(engine_err)?;
    Ok(RunOutput {
        overrun: results.iter().any(|r| r.overrun),
        records,
        trace,
        emission,
    })
}

fn run_data_driven_realtime(a: &RunArgs, queries: &[ContinuousQuery], input: &Input) -> Result<RunOutput, CliError> {
    let engine = Arc::new(Mutex::new(data_driven_engine(a, queries, input)?));
    let (tx, rx) = mpsc::sync_channel::<TimestampedTriple>(4096);
    let consumer = {
        let engine = Arc::clone(&engine);
        let dict = Arc::clone(&input.dict);
        std::thread::spawn(move || -> Result<Vec<OutputRecord>, EngineError> {
            let mut records = Vec::new();
            for tt in rx {
                let deltas = engine.lock().expect("engine lock").on_arrival(tt)?;
                for d in deltas.into_iter().filter(|d| !d.new_answers.is_empty()) {
                    records.push(OutputRecord::Delta(d.record(&dict)?));
                }
            }
            Ok(records)
        })
    };
    let handle = Arc::clone(&engine);
    let sampler = MemorySampler::start(Duration::from_millis(a.sample_interval), move || {
        handle.lock().expect("engine lock").approx_bytes()
    });
    let parts = split_by_stream(&input.log);
    let sinks: Vec<_> = parts.iter().map(|_| tx.clone()).collect();
    drop(tx);
    let emitted = emit_streams(parts, sinks, Pacing::RealTime, SINK_TIMEOUT);
    let records = consumer
        .join()
        .map_err(|_| CliError::runtime("engine thread panicked"))?
        .map_err(engine_err)?;
    let trace = sampler.stop();
    Ok(RunOutput {
        records,
        overrun: false,
        trace,
        emission: emitted.map_err(|e| CliError::runtime(e.to_string()))?,
    })
}

fn print_verdict(v: &OracleVerdict, show: usize, w: &mut impl Write) -> std::io::Result<()> {
    let verdict = if v.is_exact() { "exact" } else { "mismatch" };
    writeln!(
        w,
        "query {}: {verdict} over {} instant(s), {} missing, {} spurious",
        v.query,
        v.instants.len(),
        v.missing.len(),
        v.spurious.len()
    )?;
    let fmt = |a: &[rsplab::rdf::Term]| a.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ");
    for (t, a) in v.missing.iter().take(show) {
        writeln!(w, "  missing  @{t}: {}", fmt(a))?;
    }
    for (t, a) in v.spurious.iter().take(show) {
        writeln!(w, "  spurious @{t}: {}", fmt(a))?;
    }
    Ok(())
}

fn read_records(path: &Path) -> Result<Vec<OutputRecord>, CliError> {
    let f = File::open(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CliError::config(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn verify(a: VerifyArgs) -> Outcome {
    let q = load_query(&a.query)?;
    let dict = Dictionary::new();
    let log = parse_stream_log(&read(&a.log)?, &dict)
        .map_err(|e| CliError::config(format!("{}: {e}", a.log.display())))?;
    let static_graph = match &a.static_data {
        Some(p) => load_static_graph(&read(p)?, &dict).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
        None => StaticGraph::default(),
    };
    let records = read_records(&a.output)?;
    let oracle = Oracle::new(&log, &dict, &static_graph).map_err(oracle_err)?;
    let v = verify_output(&oracle, &q, &query_name(&q, 0), &records).map_err(oracle_err)?;
    print_verdict(&v, a.show, &mut std::io::stdout().lock()).map_err(io_err)?;
    Ok(if v.is_exact() { 0 } else { EXIT_MISMATCH })
}

fn synthetic_cost(text: &str) -> Result<CostModel, CliError> {
    let bad = || CliError::config(format!("--synthetic-cost expects BASE_MS,PER_TRIPLE_MS, got {text:?}"));
    let (b, p) = text.split_once(',').ok_or_else(bad)?;
    let base_ms: f64 = b.trim().parse().map_err(|_| bad())?;
    let per_triple_ms: f64 = p.trim().parse().map_err(|_| bad())?;
    Ok(CostModel::Synthetic { base_ms, per_triple_ms })
}

pub fn bench(a: BenchArgs) -> Outcome {
    let query = load_query(&a.query)?;
    let sweep: SweepParam = a.sweep.parse().map_err(CliError::config)?;
    let name = Path::new(&a.query)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(&a.query)
        .to_string();
    let mut spec = ExperimentSpec::new(a.engine, &name, query, sweep, a.grid.clone());
    spec.iterations = a.iters;
    spec.warmup_s = a.warmup;
    spec.rate = a.rate;
    spec.range_ms = a.range.map(|s| (s * 1000.0).round() as u64);
    spec.triples = a.triples;
    spec.streams = a.streams;
    spec.static_mb = a.static_mb;
    spec.generator.seed = a.seed;
    spec.generator.n_sensors = a.sensors;
    spec.generator.tags_per_observation = a.tags;
    spec.generator.tag_pool = spec.generator.tag_pool.max(a.tags);
    spec.check_limit = a.check_limit;
    spec.cost = match &a.synthetic_cost {
        Some(text) => synthetic_cost(text)?,
        None => CostModel::Measured { slowdown: a.slowdown, repeats: a.repeats },
    };
    if a.warmup == 0.0 {
        eprintln!("warning: no warm-up; early measurements include cold caches");
    }
    let report = run_bench(&spec).map_err(bench_err)?;

    let mut w = sink(a.out.as_deref())?;
    report.write_csv(&mut w).map_err(bench_err)?;
    w.flush().map_err(io_err)?;
    if let Some(dir) = &a.trace_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))?;
        for (row, trace) in report.rows.iter().zip(&report.traces) {
            let path: PathBuf = dir.join(format!("trace-{}.csv", row.value));
            trace.write_csv(create(&path)?).map_err(bench_err)?;
        }
    }
    if let Some(fit) = report.fit {
        eprintln!(
            "fit: time = {:.6} + {:.6} * {}, R^2 = {:.4}",
            fit.intercept,
            fit.slope,
            sweep.name(),
            fit.r2
        );
    }
    Ok(if report.any_mismatch() {
        EXIT_MISMATCH
    } else if report.any_saturated() {
        EXIT_SATURATED
    } else {
        0
    })
}

pub fn ratemax(a: RateMaxArgs) -> Outcome {
    if !(a.step.is_finite() && a.step > 0.0) {
        return Err(CliError::config("--step must be positive"));
    }
    let step_ms = (a.step * 1000.0).round() as u64;
    let result = match a.stub_c {
        Some(c) => search(&mut StubProbe { c, step_ms }, &a)?,
        None => {
            if !(a.slowdown.is_finite() && a.slowdown > 0.0) || a.repeats == 0 {
                return Err(CliError::config("--slowdown must be positive and --repeats at least 1"));
            }
            let q = load_query(&a.query)?.with_step(step_ms);
            search(&mut EngineProbe::new(q, a.seed, CostModel::Measured { slowdown: a.slowdown, repeats: a.repeats }), &a)?
        }
    };
    let text = serde_json::to_string_pretty(&result).map_err(|e| CliError::runtime(e.to_string()))?;
    println!("{text}");
    if !result.upper_overruns {
        eprintln!("warning: the rate just above the result sustained on re-check; timings are noisy");
    }
    Ok(0)
}

fn search(probe: &mut impl RateProbe, a: &RateMaxArgs) -> Result<rsplab::bench::RateMax, CliError> {
    find_rate_max(probe, a.lo, a.hi, a.tol).map_err(bench_err)
}

pub fn mcr(a: McrArgs) -> Outcome {
    let f = File::open(&a.trace).map_err(|e| CliError::config(format!("cannot read {}: {e}", a.trace.display())))?;
    let trace = MemoryTrace::read_csv(f).map_err(bench_err)?;
    let est = compute_mcr(&trace).map_err(bench_err)?;
    let text = serde_json::to_string_pretty(&est).map_err(|e| CliError::runtime(e.to_string()))?;
    println!("{text}");
    Ok(0)
}
