use std::sync::mpsc::sync_channel;
use std::time::Duration;

use rsplab::generator::*;
use rsplab::rdf::ntriples::render_log;
use rsplab::rdf::{load_static_graph, Dictionary, StreamId, Term, TimestampedTriple};

#[test]
fn chlorine_law_holds_for_any_count() {
    for cycle in [1u32, 4, 50] {
        let cfg = GeneratorConfig {
            flow_per_chlorine: cycle,
            ..Default::default()
        };
        for count in [0u64, 1, 50, 51, 52, 101, 102, 1000, 5099] {
            let events = generate_events(&cfg, count);
            let chlorine = events.iter().filter(|e| e.kind == ObservationKind::Chlorine).count() as u64;
            assert_eq!(chlorine, count / u64::from(cycle + 1), "cycle {cycle}, count {count}");
        }
    }
}

#[test]
fn ten_thousand_events_have_one_hundred_ids_ending_00() {
    let dict = Dictionary::new();
    let cfg = GeneratorConfig::default();
    let log = generate_log(&cfg, 10_000, &dict);
    assert_eq!(log.len(), 70_000);
    // Count over the emitted text, independently of the generator's types.
    let text = render_log(&dict, &log);
    let ids = text
        .lines()
        .filter(|l| l.contains("<http://example.org/water/hasId>"))
        .filter(|l| l.contains("00\" .") || l.contains("00\"^^"))
        .count();
    assert_eq!(ids, 100);
}

#[test]
fn same_seed_same_bytes() {
    let render = |seed| {
        let dict = Dictionary::new();
        let cfg = GeneratorConfig {
            seed,
            n_streams: 3,
            partition: Partition::Hash,
            ..Default::default()
        };
        render_log(&dict, &generate_log(&cfg, 500, &dict))
    };
    assert_eq!(render(3), render(3));
    assert_ne!(render(3), render(4));
}

fn merged_rendering(k: u32, partition: Partition, rate: f64) -> String {
    let dict = Dictionary::new();
    let cfg = GeneratorConfig {
        n_streams: k,
        partition,
        emission: Emission::Rate(rate),
        ..Default::default()
    };
    let parts = split_by_stream(&generate_log(&cfg, 3000, &dict));
    let merged = merge_partitions(&parts, |tt| event_index(&dict, &tt.triple).expect("generated subject"));
    render_log(&dict, &merged)
}

#[test]
fn merging_partitions_reproduces_single_stream_log() {
    let single = merged_rendering(1, Partition::RoundRobin, 5000.0);
    for k in [2, 5, 7] {
        assert_eq!(merged_rendering(k, Partition::RoundRobin, 5000.0), single);
        assert_eq!(merged_rendering(k, Partition::Hash, 5000.0), single);
    }
}

#[test]
fn events_stay_on_one_stream() {
    let dict = Dictionary::new();
    let cfg = GeneratorConfig {
        n_streams: 4,
        partition: Partition::Hash,
        ..Default::default()
    };
    let log = generate_log(&cfg, 400, &dict);
    for chunk in log.chunks(7) {
        assert!(chunk.iter().all(|tt| tt.stream == chunk[0].stream));
    }
}

#[test]
fn five_streams_at_1000_equal_one_stream_at_5000() {
    // Per-stream rate 1000 with 5 streams is a global grid of 5000 triples/s.
    let dict = Dictionary::new();
    let one = generate_log(
        &GeneratorConfig {
            emission: Emission::Rate(5000.0),
            ..Default::default()
        },
        2000,
        &dict,
    );
    let five = generate_log(
        &GeneratorConfig {
            emission: Emission::Rate(5000.0),
            n_streams: 5,
            ..Default::default()
        },
        2000,
        &dict,
    );
    let per_stream: Vec<usize> = split_by_stream(&five).iter().map(Vec::len).collect();
    assert!(per_stream.iter().all(|&n| n == 2800));
    let mut a: Vec<_> = one.iter().map(|t| (t.triple, t.t)).collect();
    let mut b: Vec<_> = five.iter().map(|t| (t.triple, t.t)).collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

#[test]
fn grid_rate_within_five_percent_over_any_second() {
    let dict = Dictionary::new();
    let cfg = GeneratorConfig {
        emission: Emission::Rate(1000.0),
        ..Default::default()
    };
    let log = generate_log(&cfg, 10_000 / 7 + 1, &dict);
    let times: Vec<u64> = log.iter().map(|t| t.t).collect();
    for start in (0..9_000).step_by(250) {
        let n = times.iter().filter(|&&t| t >= start && t < start + 1000).count();
        assert!((950..=1050).contains(&n), "{n} triples in [{start}, {})", start + 1000);
    }
}

#[test]
fn real_time_emission_keeps_rate() {
    let dict = Dictionary::new();
    let cfg = GeneratorConfig {
        emission: Emission::Rate(2000.0),
        ..Default::default()
    };
    let log = generate_log(&cfg, 3000 / 7, &dict);
    let mut sink: Vec<TimestampedTriple> = Vec::new();
    let report = emit(&log, &mut sink, Pacing::RealTime, Duration::from_secs(1)).unwrap();
    assert_eq!(report.count, log.len());
    let span_ms = (log.last().unwrap().t - log[0].t) as f64;
    let wall_ms = report.wall.as_secs_f64() * 1000.0;
    assert!((wall_ms - span_ms).abs() <= 0.05 * span_ms, "wall {wall_ms} vs span {span_ms}");
}

#[test]
fn batch_emission_records_count_and_duration() {
    let dict = Dictionary::new();
    let cfg = GeneratorConfig {
        emission: Emission::Batch { virtual_rate: 10_000.0 },
        ..Default::default()
    };
    let log = generate_log(&cfg, 100_000 / 7 + 1, &dict);
    let mut n = 0usize;
    let mut count = |_: TimestampedTriple| -> Result<(), GenError> {
        n += 1;
        Ok(())
    };
    let report = emit(&log, &mut count, Pacing::AsFastAsPossible, Duration::from_secs(1)).unwrap();
    assert_eq!(report.count, log.len());
    assert!(report.count >= 100_000);
    assert!(report.wall < Duration::from_secs(5));
}

#[test]
fn backpressure_times_out() {
    let dict = Dictionary::new();
    let log = generate_log(&GeneratorConfig::default(), 2, &dict);
    let (tx, _rx) = sync_channel(1);
    let mut tx = tx;
    let err = emit(&log, &mut tx, Pacing::AsFastAsPossible, Duration::from_millis(20)).unwrap_err();
    assert_eq!(err, GenError::Backpressure(Duration::from_millis(20)));
}

#[test]
fn concurrent_emitters_deliver_every_stream() {
    let dict = Dictionary::new();
    let cfg = GeneratorConfig {
        n_streams: 3,
        emission: Emission::Rate(6000.0),
        ..Default::default()
    };
    let parts = split_by_stream(&generate_log(&cfg, 300, &dict));
    let (tx, rx) = std::sync::mpsc::channel();
    let sinks: Vec<_> = (0..3)
        .map(|_| {
            let tx = tx.clone();
            move |tt: TimestampedTriple| tx.send(tt).map_err(|_| GenError::Disconnected)
        })
        .collect();
    drop(tx);
    let logs = emit_streams(parts.clone(), sinks, Pacing::RealTime, Duration::from_secs(1)).unwrap();
    assert_eq!(logs.iter().map(|l| l.count).sum::<usize>(), 2100);
    let got: Vec<TimestampedTriple> = rx.iter().collect();
    assert_eq!(got.len(), 2100);
    for s in 0..3 {
        let mine: Vec<_> = got.iter().filter(|t| t.stream == StreamId(s)).copied().collect();
        assert_eq!(mine, parts[s as usize]);
    }
}

#[test]
fn static_document_size_targeting() {
    let cfg = GeneratorConfig {
        n_sensors: 1000,
        ..Default::default()
    };
    let target = 10 * 1024 * 1024;
    let doc = generate_static(&cfg, Some(target));
    let err = (doc.len() as f64 - target as f64).abs() / target as f64;
    assert!(err < 0.02, "{} bytes", doc.len());
    let dict = Dictionary::new();
    assert_eq!(load_static_graph(&doc, &dict).unwrap().len(), 3000);
}

#[test]
fn every_sensor_reference_has_static_description() {
    let cfg = GeneratorConfig {
        n_sensors: 7,
        ..Default::default()
    };
    let dict = Dictionary::new();
    let graph = load_static_graph(&generate_static(&cfg, None), &dict).unwrap();
    for e in generate_events(&cfg, 100) {
        let sensor = &e.triples.last().unwrap()[2];
        let id = dict.lookup(sensor).expect("sensor interned by static load");
        assert_eq!(graph.lookup(Some(id), None, None).len(), 3);
    }
    assert_eq!(
        generate_events(&cfg, 8)[7].triples.last().unwrap()[2],
        Term::iri("http://example.org/water/sensor/0")
    );
}

#[test]
fn async_split_delays_tags_onto_second_stream() {
    let dict = Dictionary::new();
    let cfg = GeneratorConfig {
        n_streams: 2,
        async_split_ms: Some(3000),
        ..Default::default()
    };
    let log = generate_log(&cfg, 20, &dict);
    let has_tag = dict.lookup(&Term::iri("http://example.org/water/hasTag")).unwrap();
    for tt in &log {
        assert_eq!(tt.stream == StreamId(1), tt.triple.p == has_tag);
    }
    assert!(log.windows(2).all(|w| w[0].t <= w[1].t));
    assert!(log.last().unwrap().t >= 3000);
}
