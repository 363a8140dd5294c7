mod common;

use std::sync::Arc;

use common::{random_trace, trace_for, Trace};
use rsplab::engine::{CostModel, EngineError, TimeDrivenConfig, TimeDrivenEngine};
use rsplab::generator::{split_by_stream, GeneratorConfig, Partition};
use rsplab::oracle::{to_terms, Oracle};
use rsplab::query::{canonical_query, ContinuousQuery, WindowRange};
use rsplab::rdf::StreamId;

fn synthetic() -> TimeDrivenConfig {
    TimeDrivenConfig {
        cost: CostModel::Synthetic {
            base_ms: 1.0,
            per_triple_ms: 0.0,
        },
    }
}

fn engine(trace: &Trace) -> TimeDrivenEngine {
    TimeDrivenEngine::new(Arc::clone(&trace.dict), Arc::clone(&trace.static_graph), synthetic())
}

/// Runs `q` over the trace and checks every execution against the oracle.
fn check_against_oracle(trace: &Trace, q: &ContinuousQuery) -> usize {
    let mut e = engine(trace);
    e.register_query(q, 0).unwrap();
    let until = trace.last_t() + trace.range_ms + 1000;
    let results = e.replay(&trace.log, until).unwrap();
    let oracle = Oracle::new(&trace.log, &trace.dict, &trace.static_graph).unwrap();
    for r in &results {
        let got = to_terms(&r.answers, &trace.dict).unwrap();
        let want = oracle.eval(q, r.instant).unwrap();
        assert_eq!(got, want, "instant {} of {:?}", r.instant, q.name);
    }
    results.iter().map(|r| r.answers.len()).sum()
}

#[test]
fn every_canonical_query_matches_oracle_at_every_tick() {
    let mut nonempty = 0;
    for seed in 0..12 {
        let trace = random_trace(seed, 2000);
        for name in ["q1", "q1prime", "q2", "q3", "q4", "q5", "q6"] {
            let q = canonical_query(name).with_range(WindowRange::Millis(trace.range_ms));
            nonempty += check_against_oracle(&trace, &q);
        }
    }
    assert!(nonempty > 0, "fixtures must produce answers");
}

#[test]
fn q1_three_hundred_events() {
    let trace = trace_for(GeneratorConfig::default(), 300, 10_000);
    assert!(check_against_oracle(&trace, &canonical_query("q1")) > 0);
}

#[test]
fn rstream_repeats_stable_window() {
    let trace = trace_for(GeneratorConfig::default(), 60, 10_000);
    let mut e = engine(&trace);
    e.register_query(&canonical_query("q1"), 0).unwrap();
    for tt in &trace.log {
        e.push(*tt).unwrap();
    }
    // All 420 triples sit in [0, 420) ms, so executions at 1 s and 2 s see the same window.
    let r = e.tick(2000).unwrap();
    assert_eq!(r.len(), 2);
    assert!(!r[0].answers.is_empty());
    assert_eq!(r[0].answers, r[1].answers);
}

#[test]
fn empty_window_gives_empty_answers_without_overrun() {
    let trace = trace_for(GeneratorConfig::default(), 0, 10_000);
    let mut e = engine(&trace);
    e.register_query(&canonical_query("q1"), 0).unwrap();
    let r = e.tick(1000).unwrap();
    assert!(r[0].answers.is_empty());
    assert!(!r[0].overrun);
}

#[test]
fn buffers_hold_exactly_the_trace() {
    let cfg = GeneratorConfig {
        emission: rsplab::generator::Emission::Rate(100_000.0),
        ..Default::default()
    };
    let trace = trace_for(cfg, 100_000 / 7, 10_000);
    let mut e = engine(&trace);
    let id = e.register_query(&canonical_query("q1"), 0).unwrap();
    for tt in &trace.log {
        e.push(*tt).unwrap();
    }
    assert_eq!(e.buffer_contents(id, StreamId(0)), trace.log);
}

#[test]
fn out_of_order_push_rejected() {
    let trace = trace_for(GeneratorConfig::default(), 10, 10_000);
    let mut e = engine(&trace);
    e.register_query(&canonical_query("q1"), 0).unwrap();
    e.push(trace.log[5]).unwrap();
    assert!(matches!(e.push(trace.log[0]), Err(EngineError::Algebra(_))));
}

#[test]
fn buffers_per_referenced_stream() {
    let trace = trace_for(GeneratorConfig::default(), 0, 10_000);
    let mut e = engine(&trace);
    let one = e.register_query(&canonical_query("q1"), 0).unwrap();
    let two = e.register_query(&canonical_query("q1").over_streams(2), 0).unwrap();
    assert_eq!(e.buffer_count(one), 1);
    assert_eq!(e.buffer_count(two), 2);
}

#[test]
fn partitioned_streams_give_single_stream_answers_at_higher_probe_cost() {
    for (k, partition) in [(2, Partition::RoundRobin), (3, Partition::Hash), (5, Partition::RoundRobin)] {
        let cfg = GeneratorConfig {
            seed: u64::from(k),
            n_streams: k,
            partition,
            flow_per_chlorine: 5,
            emission: rsplab::generator::Emission::Rate(700.0),
            ..Default::default()
        };
        let multi = trace_for(cfg.clone(), 500, 10_000);
        let merged: Vec<_> = multi
            .log
            .iter()
            .map(|tt| rsplab::rdf::TimestampedTriple::new(tt.triple, tt.t, StreamId(0)))
            .collect();
        assert_eq!(split_by_stream(&multi.log).len(), k as usize);
        let until = multi.last_t() + 11_000;

        let mut single = engine(&multi);
        single.register_query(&canonical_query("q1"), 0).unwrap();
        let a = single.replay(&merged, until).unwrap();
        let mut many = engine(&multi);
        many.register_query(&canonical_query("q1").over_streams(k), 0).unwrap();
        let b = many.replay(&multi.log, until).unwrap();

        assert_eq!(a.len(), b.len());
        let (mut pa, mut pb) = (0, 0);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.instant, y.instant);
            assert_eq!(x.answers, y.answers);
            pa += x.probe_count;
            pb += y.probe_count;
        }
        assert!(pb >= pa, "k={k}: {pb} < {pa}");
    }
}

#[test]
fn overrun_becomes_permanent_above_a_rate() {
    // Execution cost grows with snapshot size: 0.01 ms per buffered triple
    // against a 1 s step saturates once a 10 s window holds 10^5 triples.
    let run = |rate: f64| {
        let cfg = GeneratorConfig {
            emission: rsplab::generator::Emission::Rate(rate),
            ..Default::default()
        };
        let events = (rate * 30.0 / 7.0) as u64;
        let trace = trace_for(cfg, events, 10_000);
        let mut e = TimeDrivenEngine::new(
            Arc::clone(&trace.dict),
            Arc::clone(&trace.static_graph),
            TimeDrivenConfig {
                cost: CostModel::Synthetic {
                    base_ms: 0.0,
                    per_triple_ms: 0.01,
                },
            },
        );
        e.register_query(&canonical_query("q1"), 0).unwrap();
        let mut backlog = Vec::new();
        let mut overruns = Vec::new();
        let mut it = trace.log.iter().peekable();
        for second in 1..=30u64 {
            while let Some(tt) = it.next_if(|tt| tt.t <= second * 1000) {
                e.push(*tt).unwrap();
            }
            for r in e.tick(second * 1000).unwrap() {
                overruns.push(r.overrun);
            }
            backlog.push(e.backlog());
        }
        // Input stops; one more step lets on-time executions finish.
        e.tick(31_000).unwrap();
        backlog.push(e.backlog());
        (overruns, backlog)
    };
    let (over, backlog) = run(5_000.0);
    assert!(over.iter().all(|o| !o));
    // Only the triples of the step still being executed (its closing
    // millisecond included) are uncovered.
    assert!(backlog.iter().all(|&b| b <= 5_005), "{backlog:?}");
    assert_eq!(backlog.last(), Some(&0));
    let (over, backlog) = run(20_000.0);
    let first = over.iter().position(|&o| o).expect("saturates");
    assert!(over[first..].iter().all(|&o| o));
    assert!(backlog[25] > backlog[20] && backlog[20] > backlog[15]);
}
