use std::collections::BTreeMap;

use declbot_core::engine::{aggregate, AggItem, Aggregation, CompiledProgram, FactSet};
use declbot_core::rulelang::listings::LISTING_2;
use declbot_core::rulelang::{
    format_program, parse_program, tokenize_bytes, AggTerm, AggregateExpr, BinOp, Body, EqOp, Expr,
    HeadAtom, HeadForm, Literal, Program, Rule, Span,
};
use declbot_core::{Record, Value};
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// Syntax

proptest! {
    #[test]
    fn tokenizer_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        match tokenize_bytes(&bytes) {
            Ok(tokens) => {
                for t in tokens {
                    prop_assert!(t.line >= 1 && t.column >= 1);
                }
            }
            Err(e) => prop_assert!(e.line >= 1 && e.column >= 1),
        }
        if let Ok(s) = std::str::from_utf8(&bytes) {
            let _ = parse_program(s);
        }
    }

    #[test]
    fn program_text_never_panics(src in "[A-Za-z_(){}\\[\\]:;,.=<>!+*/ \n\"0-9|-]{0,120}") {
        let _ = parse_program(&src);
    }
}

fn var_name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,5}".prop_filter("keyword", |s| {
        !matches!(s.as_str(), "in" | "null" | "true" | "false")
    })
}

fn pred_name() -> impl Strategy<Value = String> {
    "[A-Z][A-Za-z0-9]{0,5}"
}

fn scalar() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        (-1e6f64..1e6).prop_map(Value::Number),
        (0u32..1000).prop_map(|n| Value::Number(n as f64)),
        "[ -~\\n\\t\u{e9}\u{3bb}]{0,8}".prop_map(Value::from),
    ]
}

fn args(inner: BoxedStrategy<Expr>) -> impl Strategy<Value = Vec<(String, Expr)>> {
    prop_oneof![
        proptest::collection::vec(inner.clone(), 0..3).prop_map(|es| {
            es.into_iter()
                .enumerate()
                .map(|(i, e)| (format!("arg{i}"), e))
                .collect()
        }),
        proptest::collection::btree_map(var_name(), inner, 0..3)
            .prop_map(|m| m.into_iter().collect()),
    ]
}

fn binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![
        Just(BinOp::Mul),
        Just(BinOp::Div),
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Eq),
        Just(BinOp::Ne),
        Just(BinOp::Lt),
        Just(BinOp::Le),
        Just(BinOp::Gt),
        Just(BinOp::Ge),
    ]
}

fn expr() -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        scalar().prop_map(Expr::Const),
        var_name().prop_map(Expr::Var)
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), var_name()).prop_map(|(e, f)| Expr::Field(Box::new(e), f)),
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (binop(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::Binary(
                op,
                Box::new(a),
                Box::new(b)
            )),
            proptest::collection::btree_map(var_name(), inner.clone(), 0..3)
                .prop_map(|m| Expr::Record(m.into_iter().collect())),
            proptest::collection::vec(inner.clone(), 0..3).prop_map(Expr::List),
            (pred_name(), args(inner.clone())).prop_map(|(name, args)| Expr::Call { name, args }),
            (
                pred_name(),
                proptest::option::of(inner.clone()),
                inner.clone(),
                body(inner.clone())
            )
                .prop_map(|(aggregation, lhs, rhs, body)| {
                    Expr::Aggregate(Box::new(AggregateExpr {
                        aggregation,
                        term: AggTerm { lhs, rhs },
                        body,
                    }))
                }),
        ]
    })
    .boxed()
}

fn literal(inner: BoxedStrategy<Expr>) -> impl Strategy<Value = Literal> {
    let span = Span::default();
    prop_oneof![
        (pred_name(), args(inner.clone())).prop_map(move |(predicate, args)| Literal::Atom {
            predicate,
            args,
            span
        }),
        (any::<bool>(), inner.clone(), inner.clone()).prop_map(move |(assign, lhs, rhs)| {
            Literal::Eq {
                op: if assign { EqOp::Assign } else { EqOp::Equal },
                lhs,
                rhs,
                span,
            }
        }),
        (inner.clone(), inner.clone()).prop_map(move |(element, list)| Literal::In {
            element,
            list,
            span
        }),
        // A guard that is a bare call or a top-level `==` reads back as an
        // atom or an equality literal, so those are not guards.
        inner
            .prop_filter("guard shape", |e| !matches!(
                e,
                Expr::Call { .. } | Expr::Binary(BinOp::Eq, ..)
            ))
            .prop_map(move |expr| Literal::Guard { expr, span }),
    ]
}

fn body(inner: BoxedStrategy<Expr>) -> impl Strategy<Value = Body> {
    proptest::collection::vec(proptest::collection::vec(literal(inner), 1..3), 1..3)
        .prop_map(|disjuncts| Body { disjuncts })
}

fn rule() -> impl Strategy<Value = Rule> {
    let form = prop_oneof![
        Just(HeadForm::Relational),
        expr().prop_map(HeadForm::Functional),
        (pred_name(), proptest::option::of(expr()), expr()).prop_map(|(aggregation, lhs, rhs)| {
            HeadForm::Aggregating {
                aggregation,
                term: AggTerm { lhs, rhs },
            }
        }),
    ];
    (
        pred_name(),
        args(expr()),
        form,
        proptest::option::of(body(expr())),
    )
        .prop_map(|(predicate, args, form, body)| Rule {
            head: HeadAtom {
                predicate,
                args,
                form,
            },
            body,
            span: Span::default(),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn format_then_parse_is_identity(rules in proptest::collection::vec(rule(), 1..4)) {
        let program = Program { rules };
        let text = format_program(&program);
        let reparsed = parse_program(&text);
        prop_assert!(reparsed.is_ok(), "{text}\n{:?}", reparsed.err());
        let reparsed = reparsed.unwrap();
        prop_assert_eq!(&reparsed, &program, "{}", text);
        prop_assert_eq!(format_program(&reparsed), text);
    }
}

// ---------------------------------------------------------------------------
// Aggregation oracles. The references below fold in generation order with
// plain loops, independent of the engine's canonical sorting.

const TOL: f64 = 1e-12;

fn small() -> impl Strategy<Value = f64> {
    (-10f64..10.0).prop_map(|x| (x * 1e6).round() / 1e6)
}

fn nums(xs: &[f64]) -> Vec<AggItem> {
    xs.iter()
        .map(|x| AggItem::plain(Value::Number(*x)))
        .collect()
}

fn num(v: Option<Value>) -> f64 {
    v.and_then(|v| v.as_number()).expect("numeric result")
}

fn label() -> impl Strategy<Value = Value> {
    prop_oneof![
        "[a-d]".prop_map(Value::from),
        (0u8..4).prop_map(|n| Value::Number(n as f64))
    ]
}

proptest! {
    #[test]
    fn plain_aggregations_match_reference(xs in proptest::collection::vec(small(), 0..=8)) {
        let items = nums(&xs);

        let count = aggregate(Aggregation::Count, &items).unwrap();
        prop_assert_eq!(count, Some(Value::Number(xs.len() as f64)));

        let mut sum_ref = 0.0;
        for x in &xs { sum_ref += x; }
        prop_assert!((num(aggregate(Aggregation::Sum, &items).unwrap()) - sum_ref).abs() <= TOL);

        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let list = aggregate(Aggregation::List, &items).unwrap();
        prop_assert_eq!(list, Some(Value::list(sorted.iter().map(|x| Value::Number(*x)))));

        if xs.is_empty() {
            for agg in [Aggregation::Min, Aggregation::Max, Aggregation::Avg] {
                prop_assert_eq!(aggregate(agg, &items).unwrap(), None);
            }
        } else {
            let mut lo = xs[0];
            let mut hi = xs[0];
            for &x in &xs { lo = lo.min(x); hi = hi.max(x); }
            prop_assert_eq!(num(aggregate(Aggregation::Min, &items).unwrap()), lo);
            prop_assert_eq!(num(aggregate(Aggregation::Max, &items).unwrap()), hi);
            let avg = num(aggregate(Aggregation::Avg, &items).unwrap());
            prop_assert!((avg - sum_ref / xs.len() as f64).abs() <= TOL);
        }
    }

    #[test]
    fn arg_extrema_match_reference(
        pairs in proptest::collection::vec((label(), (0u8..5).prop_map(f64::from)), 0..=8)
    ) {
        let items: Vec<AggItem> = pairs.iter().map(|(v, k)| AggItem::weighted(*k, v.clone())).collect();
        for agg in [Aggregation::ArgMin, Aggregation::ArgMax] {
            let got = aggregate(agg, &items).unwrap();
            let mut want: Option<(f64, Value)> = None;
            for (v, k) in &pairs {
                let take = match &want {
                    None => true,
                    Some((bk, bv)) => {
                        let better = if agg == Aggregation::ArgMin { k < bk } else { k > bk };
                        better || (k == bk && v < bv)
                    }
                };
                if take { want = Some((*k, v.clone())); }
            }
            prop_assert_eq!(got, want.map(|(_, v)| v));
        }
    }

    #[test]
    fn arg_min_ignores_input_order(
        pairs in proptest::collection::vec((label(), (0u8..3).prop_map(f64::from)), 1..=8),
        seed in any::<u64>(),
    ) {
        let items: Vec<AggItem> = pairs.iter().map(|(v, k)| AggItem::weighted(*k, v.clone())).collect();
        let mut shuffled = items.clone();
        // Deterministic Fisher-Yates driven by the seed.
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        for agg in [Aggregation::ArgMin, Aggregation::ArgMax] {
            prop_assert_eq!(aggregate(agg, &items).unwrap(), aggregate(agg, &shuffled).unwrap());
        }
    }

    #[test]
    fn weighted_average_matches_reference_and_bounds(
        pairs in proptest::collection::vec((0.01f64..10.0, small()), 1..=8)
    ) {
        let items: Vec<AggItem> = pairs.iter().map(|(w, x)| AggItem::weighted(*w, Value::Number(*x))).collect();
        let got = num(aggregate(Aggregation::WeightedAverage, &items).unwrap());
        let (mut num_ref, mut den_ref) = (0.0, 0.0);
        for (w, x) in &pairs { num_ref += w * x; den_ref += w; }
        prop_assert!((got - num_ref / den_ref).abs() <= TOL);
        let lo = pairs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= got && got <= hi, "{got} outside [{lo}, {hi}]");
    }

    #[test]
    fn weighted_average_is_scale_invariant(
        pairs in proptest::collection::vec((0.01f64..10.0, small()), 1..=8),
        c in 1e-3f64..1e3,
    ) {
        let base: Vec<AggItem> = pairs.iter().map(|(w, x)| AggItem::weighted(*w, Value::Number(*x))).collect();
        let scaled: Vec<AggItem> = pairs.iter().map(|(w, x)| AggItem::weighted(c * w, Value::Number(*x))).collect();
        let a = num(aggregate(Aggregation::WeightedAverage, &base).unwrap());
        let b = num(aggregate(Aggregation::WeightedAverage, &scaled).unwrap());
        // Relative to the inputs' magnitude: cancellation can make the result
        // itself arbitrarily small.
        let scale = pairs.iter().map(|p| p.1.abs()).fold(a.abs(), f64::max);
        prop_assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
    }
}

// ---------------------------------------------------------------------------
// One Bellman-Ford round never lengthens a known distance.

fn row(fields: &[(&str, Value)]) -> Record {
    fields
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

proptest! {
    #[test]
    fn relaxation_contracts(
        prior in proptest::collection::btree_map(0u8..6, 0u32..50, 1..6),
        edges in proptest::collection::btree_map((0u8..6, 0u8..6), 0u32..20, 0..12),
    ) {
        let program = CompiledProgram::from_source(LISTING_2).unwrap();
        let name = |b: u8| Value::str(if b == 0 { "Home".to_string() } else { format!("B{b}") });
        let mut inputs = FactSet::new();
        for (b, d) in &prior {
            inputs.insert("HomeDistance", row(&[("arg0", name(*b)), ("value", Value::Number(f64::from(*d)))]));
        }
        for ((a, b), d) in &edges {
            inputs.insert("D", row(&[("arg0", name(*a)), ("arg1", name(*b)), ("value", Value::Number(f64::from(*d)))]));
        }
        let out = program.evaluate(&inputs).unwrap();
        let posterior: BTreeMap<Value, f64> = out
            .rows("PosteriorHomeDistance")
            .map(|r| (r["arg0"].clone(), r["value"].as_number().unwrap()))
            .collect();
        for (b, d) in &prior {
            let p = posterior[&name(*b)];
            prop_assert!(p <= f64::from(*d));
        }
        // Reference: min over prior, zero at Home, and one relaxation step.
        for (b, p) in &posterior {
            let mut want = f64::INFINITY;
            for (pb, d) in &prior { if name(*pb) == *b { want = want.min(f64::from(*d)); } }
            if *b == Value::str("Home") { want = want.min(0.0); }
            for ((x, y), w) in &edges {
                if name(*y) == *b {
                    if let Some(dx) = prior.get(x) { want = want.min(f64::from(*dx + *w)); }
                }
            }
            prop_assert_eq!(*p, want);
        }
    }
}
