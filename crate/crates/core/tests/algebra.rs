use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsplab::algebra::{evaluate, PatternInput, QueryPlan, WindowBuffer};
use rsplab::oracle::{to_terms, Oracle};
use rsplab::query::*;
use rsplab::rdf::{Dictionary, StaticGraph, StreamId, Term, TimestampedTriple, Triple};

const VARS: [&str; 4] = ["a", "b", "c", "d"];

fn node(i: u32) -> Term {
    Term::iri(format!("http://example.org/n{i}"))
}

fn pred(i: u32) -> Term {
    Term::iri(format!("http://example.org/p{i}"))
}

fn lit(i: u32) -> Term {
    Term::string(format!("v{i}"))
}

fn random_log(rng: &mut ChaCha8Rng, dict: &Dictionary) -> Vec<TimestampedTriple> {
    let n = rng.gen_range(0..=400);
    let mut t = 0;
    (0..n)
        .map(|_| {
            t += rng.gen_range(0..40);
            let o = if rng.gen_bool(0.3) { lit(rng.gen_range(0..3)) } else { node(rng.gen_range(0..6)) };
            let triple = Triple::new(
                dict.intern(&node(rng.gen_range(0..6))),
                dict.intern(&pred(rng.gen_range(0..3))),
                dict.intern(&o),
            );
            TimestampedTriple::new(triple, t, StreamId(0))
        })
        .collect()
}

fn random_pattern_term(rng: &mut ChaCha8Rng) -> PatternTerm {
    if rng.gen_bool(0.7) {
        PatternTerm::Var(Variable::new(VARS[rng.gen_range(0..VARS.len())]))
    } else {
        PatternTerm::Const(node(rng.gen_range(0..6)))
    }
}

fn random_query(rng: &mut ChaCha8Rng) -> ContinuousQuery {
    let range = rng.gen_range(1..=12) * 1000;
    let n = rng.gen_range(1..=4);
    let patterns: Vec<TriplePattern> = (0..n)
        .map(|_| TriplePattern {
            s: random_pattern_term(rng),
            p: if rng.gen_bool(0.8) {
                PatternTerm::Const(pred(rng.gen_range(0..3)))
            } else {
                PatternTerm::Var(Variable::new("p"))
            },
            o: random_pattern_term(rng),
            source: PatternSource::DefaultStreams,
        })
        .collect();
    let mut vars: Vec<Variable> = Vec::new();
    for p in &patterns {
        for v in p.variables() {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    }
    let mut q = ContinuousQuery {
        name: None,
        prefixes: Vec::new(),
        report: ReportPolicy::Rstream,
        select: vars.iter().cloned().map(SelectItem::Var).collect(),
        from_streams: vec![StreamWindow {
            stream: StreamId(0),
            window: WindowSpec::new(range, 1000),
        }],
        patterns,
        union_branches: None,
        filters: Vec::new(),
        temporal_filter: None,
        group_by: None,
        having: None,
    };
    if vars.is_empty() {
        // Every query binds something; add a pattern that does.
        q.patterns.push(TriplePattern {
            s: PatternTerm::Var(Variable::new("a")),
            p: PatternTerm::Const(pred(0)),
            o: PatternTerm::Var(Variable::new("b")),
            source: PatternSource::DefaultStreams,
        });
        q.select = vec![SelectItem::Var(Variable::new("a")), SelectItem::Var(Variable::new("b"))];
        vars = vec![Variable::new("a"), Variable::new("b")];
    }
    if rng.gen_bool(0.4) {
        let v = vars[rng.gen_range(0..vars.len())].clone();
        let c = if rng.gen_bool(0.5) { node(rng.gen_range(0..6)) } else { lit(rng.gen_range(0..3)) };
        let cmp = FilterExpr::Compare(CompareOp::Eq, Operand::Var(v), Operand::Const(c));
        q.filters.push(if rng.gen_bool(0.5) { FilterExpr::Not(Box::new(cmp)) } else { cmp });
    }
    if rng.gen_bool(0.3) {
        let key = vars[0].clone();
        let counted = vars[rng.gen_range(0..vars.len())].clone();
        q.group_by = Some(vec![key.clone()]);
        q.select = vec![
            SelectItem::Var(key),
            SelectItem::Count {
                var: counted.clone(),
                alias: Variable::new("n"),
            },
        ];
        if rng.gen_bool(0.5) {
            q.having = Some(FilterExpr::Compare(
                CompareOp::Gt,
                Operand::Count(counted),
                Operand::Const(Term::integer(1)),
            ));
        }
    }
    validate(&q).expect("generated query is valid");
    q
}

#[test]
fn evaluate_agrees_with_oracle_on_random_instances() {
    let mut nonempty = 0;
    for seed in 0..500 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dict = Dictionary::new();
        let log = random_log(&mut rng, &dict);
        let q = random_query(&mut rng);
        let now = log.last().map_or(0, |t| t.t) + rng.gen_range(0..2000);

        let plan = QueryPlan::compile(&q, &dict);
        let mut buf = WindowBuffer::new(StreamId(0), q.from_streams[0].window.range);
        for tt in &log {
            buf.insert(*tt).unwrap();
        }
        let snapshot = buf.snapshot(now).to_vec();
        let mut probes = 0;
        let got = evaluate(&plan, |_, _| PatternInput::Triples(&snapshot), now, &dict, &mut probes).unwrap();
        let got = to_terms(&got, &dict).unwrap();
        let want = Oracle::new(&log, &dict, &StaticGraph::default()).unwrap().eval(&q, now).unwrap();
        assert_eq!(got, want, "seed {seed}: {q}");
        nonempty += usize::from(!got.is_empty());
    }
    assert!(nonempty > 100, "only {nonempty} instances had answers");
}

#[test]
fn filter_selects_ids_by_suffix() {
    let dict = Dictionary::new();
    let ex = |l: &str| Term::iri(format!("http://example.org/water/{l}"));
    let mut log = Vec::new();
    for (i, id) in ["00000100", "00000151", "00000250"].iter().enumerate() {
        let obs = ex(&format!("observation/{i}"));
        let meas = ex(&format!("measurement/{i}"));
        for (s, p, o) in [
            (obs.clone(), ex("observeChlorine"), meas.clone()),
            (meas.clone(), ex("hasTag"), ex("tag/1")),
            (obs.clone(), ex("hasId"), Term::string(*id)),
        ] {
            log.push(TimestampedTriple::new(
                Triple::new(dict.intern(&s), dict.intern(&p), dict.intern(&o)),
                100 * i as u64,
                StreamId(0),
            ));
        }
    }
    let q = canonical_query("q3");
    let plan = QueryPlan::compile(&q, &dict);
    let got = evaluate(&plan, |_, _| PatternInput::Triples(&log), 1000, &dict, &mut 0).unwrap();
    let ids: Vec<String> = to_terms(&got, &dict)
        .unwrap()
        .into_iter()
        .map(|a| a[1].lexical().to_string())
        .collect();
    assert_eq!(ids, vec!["00000100", "00000250"]);
}

#[test]
fn having_keeps_groups_with_three_tags() {
    let dict = Dictionary::new();
    let ex = |l: &str| dict.intern(&Term::iri(format!("http://example.org/water/{l}")));
    let mut log = Vec::new();
    for (obs, tags) in [("o1", 3), ("o2", 2)] {
        let meas = format!("m-{obs}");
        log.push(TimestampedTriple::new(Triple::new(ex(obs), ex("observeChlorine"), ex(&meas)), 10, StreamId(0)));
        for k in 0..tags {
            log.push(TimestampedTriple::new(
                Triple::new(ex(&meas), ex("hasTag"), ex(&format!("tag/{k}"))),
                20,
                StreamId(0),
            ));
        }
    }
    let plan = QueryPlan::compile(&canonical_query("q4"), &dict);
    let got = to_terms(
        &evaluate(&plan, |_, _| PatternInput::Triples(&log), 1000, &dict, &mut 0).unwrap(),
        &dict,
    )
    .unwrap();
    assert_eq!(got.len(), 1);
    let row = got.into_iter().next().unwrap();
    assert_eq!(row, vec![Term::iri("http://example.org/water/o1"), Term::integer(3)]);
}

#[test]
fn partners_outside_window_do_not_join() {
    let dict = Dictionary::new();
    let ex = |l: &str| dict.intern(&Term::iri(format!("http://example.org/water/{l}")));
    let log = vec![
        TimestampedTriple::new(Triple::new(ex("o1"), ex("observeChlorine"), ex("m1")), 0, StreamId(0)),
        TimestampedTriple::new(Triple::new(ex("m1"), ex("hasTag"), ex("t1")), 12_000, StreamId(0)),
    ];
    let q = canonical_query("q1");
    let plan = QueryPlan::compile(&q, &dict);
    let mut buf = WindowBuffer::new(StreamId(0), WindowRange::Millis(10_000));
    for tt in &log {
        buf.insert(*tt).unwrap();
    }
    let snap = buf.snapshot(12_000).to_vec();
    assert!(evaluate(&plan, |_, _| PatternInput::Triples(&snap), 12_000, &dict, &mut 0)
        .unwrap()
        .is_empty());
}

#[test]
fn evaluation_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let dict = Dictionary::new();
    let log = random_log(&mut rng, &dict);
    let q = random_query(&mut rng);
    let plan = QueryPlan::compile(&q, &dict);
    let run = || {
        let mut probes = 0;
        let a = evaluate(&plan, |_, _| PatternInput::Triples(&log), 100_000, &dict, &mut probes).unwrap();
        (a, probes)
    };
    assert_eq!(run(), run());
}
