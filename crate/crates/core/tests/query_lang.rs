use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rsplab::query::*;
use rsplab::rdf::{StreamId, Term};

const EX: &str = "http://example.org/water/";

fn var(n: &str) -> PatternTerm {
    PatternTerm::Var(Variable::new(n))
}

fn ex(local: &str) -> PatternTerm {
    PatternTerm::Const(Term::iri(format!("{EX}{local}")))
}

#[test]
fn q1_golden_ast() {
    let w = StreamWindow {
        stream: StreamId(0),
        window: WindowSpec::new(10_000, 1000),
    };
    let expected = ContinuousQuery {
        name: Some("q1".into()),
        prefixes: vec![
            ("ex".into(), EX.into()),
            ("st".into(), "http://example.org/stream/".into()),
        ],
        report: ReportPolicy::Rstream,
        select: vec![
            SelectItem::Var(Variable::new("observation")),
            SelectItem::Var(Variable::new("tag")),
        ],
        from_streams: vec![w],
        patterns: vec![
            TriplePattern {
                s: var("observation"),
                p: ex("observeChlorine"),
                o: var("chlorineObs"),
                source: PatternSource::DefaultStreams,
            },
            TriplePattern {
                s: var("chlorineObs"),
                p: ex("hasTag"),
                o: var("tag"),
                source: PatternSource::DefaultStreams,
            },
        ],
        union_branches: None,
        filters: vec![],
        temporal_filter: None,
        group_by: None,
        having: None,
    };
    assert_eq!(canonical_query("q1"), expected);
}

#[test]
fn canonical_queries_round_trip() {
    for name in CANONICAL_NAMES {
        let q = canonical_query(name);
        let text = q.to_string();
        let again = parse_continuous_query(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(q, again, "{name}");
        assert_eq!(again.to_string(), text, "{name}: not a fixpoint");
    }
}

#[test]
fn canonical_query_shapes() {
    let q3 = canonical_query("q3");
    let q2 = canonical_query("q2");
    assert_eq!(q3.patterns, q2.patterns);
    assert_eq!(q3.filters.len(), 1);
    assert!(q2.filters.is_empty());
    let q4 = canonical_query("q4");
    assert_eq!(
        q4.temporal_filter,
        Some(TemporalFilter {
            var: Variable::new("tag"),
            within: TemporalBound::Window
        })
    );
    assert!(q4.having.is_some());
    let q5 = canonical_query("q5");
    assert_eq!(q5.union_branches.as_ref().map(Vec::len), Some(2));
    assert_eq!(q5.temporal_filter.as_ref().unwrap().within, TemporalBound::Millis(5000));
    let q6 = canonical_query("q6");
    assert_eq!(q6.patterns.iter().filter(|p| p.is_static()).count(), 3);
    assert_eq!(canonical_query("q1prime").patterns.len(), 1);
}

#[test]
fn capability_reports() {
    let q4 = canonical_query("q4");
    let r = capability_check(&q4, EngineKind::DataDriven);
    assert_eq!(r.timestamp_function, Support::Rejected);
    assert_eq!(r.rejected(), vec![Feature::TimestampFunction]);
    assert!(capability_check(&canonical_query("q5"), EngineKind::DataDriven)
        .rejected()
        .contains(&Feature::TimestampFunction));
    for name in CANONICAL_NAMES {
        let q = canonical_query(name);
        assert!(capability_check(&q, EngineKind::TimeDriven).all_supported(), "{name}");
        assert_eq!(
            capability_check(&q, EngineKind::DataDriven),
            capability_check(&q, EngineKind::DataDriven)
        );
    }
    for name in ["q1", "q1prime", "q2", "q3", "q6"] {
        assert!(capability_check(&canonical_query(name), EngineKind::DataDriven).all_supported());
    }
}

#[test]
fn validation_rules() {
    let head = "PREFIX ex: <http://example.org/water/>\nSELECT";
    let from = "FROM STREAM <http://example.org/stream/0> [RANGE 1s]";
    let parse = |sel: &str, body: &str, tail: &str| {
        parse_continuous_query(&format!("{head} {sel} {from} WHERE {{ {body} }} {tail}"))
    };
    assert!(matches!(
        parse("(COUNT(?y) AS ?n)", "?x ex:p ?y", ""),
        Err(QueryError::Invalid(_))
    ));
    assert!(matches!(
        parse("?x ?y", "?x ex:p ?y", "GROUP BY ?x"),
        Err(QueryError::Invalid(_))
    ));
    assert!(matches!(
        parse("?x", "?x ex:p ?y FILTER(?z = 1)", ""),
        Err(QueryError::UnboundVariable(v)) if v == "z"
    ));
    assert!(matches!(
        parse("?x", "?x ex:p ?y FILTER(strEndsWith(3, \"0\"))", ""),
        Err(QueryError::Type(_))
    ));
    assert!(matches!(
        parse("?x", "?x ex:p ?y FILTER(?y < \"abc\")", ""),
        Err(QueryError::Type(_))
    ));
    assert!(matches!(
        parse("?x", "?x ex:p ?y STATIC { ?y ex:q ?s } FILTER(TIMESTAMP(?s) WITHIN 1s)", ""),
        Err(QueryError::Type(_))
    ));
    assert!(matches!(
        parse("?x ?u", "?x ex:p ?y { ?y ex:q ?u } UNION { ?y ex:r ?w }", ""),
        Err(QueryError::Invalid(_))
    ));
    assert!(parse("?x (COUNT(?y) AS ?n)", "?x ex:p ?y", "GROUP BY ?x HAVING (COUNT(?y) > 2)").is_ok());
    assert!(parse_continuous_query("SELECT ?x WHERE { ?x <http://p> ?y }").is_err());
}

/// Builds a random valid query from a seed; used to fuzz the serializer.
fn random_query(seed: u64) -> ContinuousQuery {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = ["a", "b", "c", "d"];
    let preds = ["hasTag", "hasId", "observeFlow", "fromSensor"];
    let window = |rng: &mut ChaCha8Rng| WindowSpec {
        range: if rng.gen_bool(0.1) {
            WindowRange::Unbounded
        } else {
            WindowRange::Millis(*[500u64, 1000, 1500, 60_000, 300_000, 3_600_000].choose(rng).unwrap())
        },
        step_ms: *[250u64, 1000, 2000].choose(rng).unwrap(),
    };
    let n_from = rng.gen_range(1..=3u32);
    let from_streams: Vec<StreamWindow> = (0..n_from)
        .map(|i| StreamWindow {
            stream: StreamId(i),
            window: window(&mut rng),
        })
        .collect();

    let term = |rng: &mut ChaCha8Rng, object: bool| -> PatternTerm {
        match rng.gen_range(0..if object { 4 } else { 3 }) {
            0 | 1 => var(vars.choose(rng).unwrap()),
            2 => ex(&format!("node{}", rng.gen_range(0..5))),
            _ => PatternTerm::Const(if rng.gen_bool(0.5) {
                Term::string(format!("v\"{}", rng.gen_range(0..100)))
            } else {
                Term::integer(rng.gen_range(-5..50))
            }),
        }
    };
    let source = |rng: &mut ChaCha8Rng, allow_static: bool| match rng.gen_range(0..if allow_static { 4 } else { 3 }) {
        0 | 1 => PatternSource::DefaultStreams,
        2 => PatternSource::Stream(StreamWindow {
            stream: StreamId(rng.gen_range(0..4)),
            window: window(rng),
        }),
        _ => PatternSource::Static,
    };

    let n_patterns = rng.gen_range(1..=4);
    let mut patterns = Vec::new();
    for i in 0..n_patterns {
        let s = if i == 0 { var("a") } else { term(&mut rng, false) };
        let p = if rng.gen_bool(0.85) {
            ex(preds.choose(&mut rng).unwrap())
        } else {
            var(vars.choose(&mut rng).unwrap())
        };
        let o = term(&mut rng, true);
        let src = source(&mut rng, i > 0);
        patterns.push(TriplePattern { s, p, o, source: src });
    }
    let union_branches = rng.gen_bool(0.3).then(|| {
        (0..rng.gen_range(2..=3))
            .map(|_| {
                vec![TriplePattern {
                    s: var("a"),
                    p: ex(preds.choose(&mut rng).unwrap()),
                    o: var("u"),
                    source: source(&mut rng, true),
                }]
            })
            .collect::<Vec<_>>()
    });
    let mut bound: Vec<String> = patterns
        .iter()
        .flat_map(|p| p.variables().map(|v| v.0.clone()))
        .collect();
    if union_branches.is_some() {
        bound.push("u".into());
    }
    bound.sort();
    bound.dedup();

    let mut plain: Vec<Variable> = bound
        .iter()
        .filter(|_| rng.gen_bool(0.6))
        .map(Variable::new)
        .collect();
    let aggregate = rng.gen_bool(0.3);
    if plain.is_empty() && !aggregate {
        plain.push(Variable::new("a"));
    }
    let mut select: Vec<SelectItem> = plain.iter().cloned().map(SelectItem::Var).collect();
    let (group_by, having) = if aggregate {
        let counted = Variable::new(bound.choose(&mut rng).unwrap());
        select.push(SelectItem::Count {
            var: counted.clone(),
            alias: Variable::new("n"),
        });
        let mut keys = plain.clone();
        if keys.is_empty() {
            keys.push(Variable::new("a"));
        }
        let having = rng.gen_bool(0.5).then(|| {
            FilterExpr::Compare(
                *[CompareOp::Eq, CompareOp::Lt, CompareOp::Gt].choose(&mut rng).unwrap(),
                Operand::Count(counted),
                Operand::Const(Term::integer(rng.gen_range(0..5))),
            )
        });
        (Some(keys), having)
    } else {
        (None, None)
    };

    let leaf = |rng: &mut ChaCha8Rng| {
        let v = Operand::Var(Variable::new(bound.choose(rng).unwrap()));
        match rng.gen_range(0..3) {
            0 => FilterExpr::StrEndsWith(v, format!("{}", rng.gen_range(0..100))),
            1 => FilterExpr::Compare(CompareOp::Eq, v, Operand::Const(Term::string("x y"))),
            _ => FilterExpr::Compare(
                CompareOp::Gt,
                v,
                Operand::Const(Term::Literal {
                    lexical: "2.5".into(),
                    datatype: rsplab::rdf::Datatype::Decimal,
                }),
            ),
        }
    };
    fn expr(rng: &mut ChaCha8Rng, depth: u32, leaf: &dyn Fn(&mut ChaCha8Rng) -> FilterExpr) -> FilterExpr {
        if depth == 0 || rng.gen_bool(0.4) {
            return leaf(rng);
        }
        match rng.gen_range(0..3) {
            0 => FilterExpr::Or(Box::new(expr(rng, depth - 1, leaf)), Box::new(expr(rng, depth - 1, leaf))),
            1 => FilterExpr::And(Box::new(expr(rng, depth - 1, leaf)), Box::new(expr(rng, depth - 1, leaf))),
            _ => FilterExpr::Not(Box::new(expr(rng, depth - 1, leaf))),
        }
    }
    let filters = (0..rng.gen_range(0..3)).map(|_| expr(&mut rng, 3, &leaf)).collect();
    let temporal_filter = (rng.gen_bool(0.3) && !patterns[0].is_static()).then(|| TemporalFilter {
        var: Variable::new("a"),
        within: if rng.gen_bool(0.5) {
            TemporalBound::Window
        } else {
            TemporalBound::Millis(rng.gen_range(1..100_000))
        },
    });
    let report = if rng.gen_bool(0.5) {
        ReportPolicy::Rstream
    } else {
        ReportPolicy::Istream
    };
    ContinuousQuery {
        name: rng.gen_bool(0.5).then(|| format!("fuzz{seed}")),
        prefixes: if rng.gen_bool(0.5) {
            vec![("ex".into(), EX.into())]
        } else {
            vec![]
        },
        report,
        select,
        from_streams,
        patterns,
        union_branches,
        filters,
        temporal_filter,
        group_by,
        having,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fuzzed_queries_round_trip(seed in any::<u64>()) {
        let q = random_query(seed);
        prop_assert_eq!(validate(&q), Ok(()));
        let text = q.to_string();
        let back = parse_continuous_query(&text);
        prop_assert!(back.is_ok(), "{:?}\n{}", back, text);
        let back = back.unwrap();
        prop_assert_eq!(&back, &q, "{}", text);
        prop_assert_eq!(back.to_string(), text);
    }
}
