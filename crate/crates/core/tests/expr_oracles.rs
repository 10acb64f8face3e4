mod common;

use common::{commute_randomly, random_columns, random_expr, reference_eval, TestRng};
use duet_core::expr::{
    canonical_key, evaluate, parse, parse_expr, render, render_expr, OperatorSet, TransformExpr,
    TransformSequence,
};
use proptest::prelude::*;

fn same_value(a: f64, b: f64, tol: f64) -> bool {
    (a.is_nan() && b.is_nan()) || (a - b).abs() <= tol
}

#[test]
fn random_ast_round_trip() {
    let ops = OperatorSet::default();
    let mut rng = TestRng::new(7);
    for _ in 0..1000 {
        let exprs: Vec<TransformExpr> = (0..1 + rng.below(4))
            .map(|_| random_expr(&mut rng, 6, 9))
            .collect();
        let seq = TransformSequence::new(exprs).unwrap();
        let text = render(&seq);
        assert!(!text.contains(char::is_whitespace));
        assert_eq!(parse(&text, &ops).unwrap(), seq, "{text}");
    }
}

#[test]
fn evaluator_matches_reference_interpreter() {
    let mut rng = TestRng::new(11);
    for _ in 0..200 {
        let columns = random_columns(&mut rng, 50, 5);
        let expr = random_expr(&mut rng, 6, 5);
        let out = evaluate(&expr, &columns).unwrap();
        assert_eq!(out.values.len(), 50);
        assert!(out.values.iter().all(|v| !v.is_infinite()));
        for row in 0..50 {
            let cells: Vec<f64> = columns.iter().map(|c| c[row]).collect();
            let expected = reference_eval(&expr, &cells);
            assert!(
                same_value(out.values[row], expected, 1e-9),
                "{expr}: row {row}: {} vs {expected}",
                out.values[row]
            );
        }
        assert_eq!(
            out.non_finite,
            out.values.iter().filter(|v| v.is_nan()).count()
        );
    }
}

#[test]
fn commuted_trees_share_key_and_values() {
    let mut rng = TestRng::new(23);
    for _ in 0..300 {
        let columns = random_columns(&mut rng, 20, 4);
        let expr = random_expr(&mut rng, 5, 4);
        let twin = commute_randomly(&mut rng, &expr);
        assert_eq!(canonical_key(&expr), canonical_key(&twin));
        let a = evaluate(&expr, &columns).unwrap().values;
        let b = evaluate(&twin, &columns).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            // `+` and `*` are commutative in IEEE arithmetic, so values agree exactly
            assert!(same_value(*x, *y, 0.0), "{expr} vs {twin}");
        }
    }
}

#[test]
fn equal_keys_imply_equal_values() {
    let mut rng = TestRng::new(29);
    let columns = random_columns(&mut rng, 30, 3);
    let exprs: Vec<TransformExpr> = (0..400).map(|_| random_expr(&mut rng, 3, 3)).collect();
    let values: Vec<Vec<f64>> = exprs
        .iter()
        .map(|e| evaluate(e, &columns).unwrap().values)
        .collect();
    let mut pairs = 0;
    for i in 0..exprs.len() {
        for j in i + 1..exprs.len() {
            if canonical_key(&exprs[i]) == canonical_key(&exprs[j]) {
                pairs += 1;
                assert!(values[i]
                    .iter()
                    .zip(&values[j])
                    .all(|(a, b)| same_value(*a, *b, 0.0)));
            }
        }
    }
    assert!(pairs > 0, "oracle never exercised");
}

#[test]
fn unparseable_feature_text_is_rejected_not_panicking() {
    for bad in [
        "", ",", "f1,,f2", "log()", "()", "f1+", "*f1", "f1 $ f2", "sin(f1",
    ] {
        assert!(parse(bad, &OperatorSet::default()).is_err(), "{bad:?}");
    }
}

fn arb_expr() -> impl Strategy<Value = TransformExpr> {
    let leaf = (1usize..12).prop_map(TransformExpr::Feature);
    leaf.prop_recursive(5, 64, 2, |inner| {
        prop_oneof![
            (0usize..8, inner.clone()).prop_map(|(k, c)| {
                let op = duet_core::expr::UnaryOp::ALL[k];
                TransformExpr::unary(op, c)
            }),
            (0usize..4, inner.clone(), inner).prop_map(|(k, l, r)| {
                let op = duet_core::expr::BinaryOp::ALL[k];
                TransformExpr::binary(op, l, r)
            }),
        ]
    })
}

proptest! {
    #[test]
    fn render_then_parse_is_identity(expr in arb_expr()) {
        let text = render_expr(&expr);
        prop_assert_eq!(parse_expr(&text).unwrap(), expr);
    }

    #[test]
    fn canonical_rendering_is_idempotent(expr in arb_expr(), noise in "[ ]{0,2}") {
        // add spaces and a redundant outer pair of parentheses
        let messy = format!("({noise}{}{noise})", render_expr(&expr));
        let once = render(&parse(&messy, &OperatorSet::default()).unwrap());
        let twice = render(&parse(&once, &OperatorSet::default()).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn tokenizer_never_panics(s in "\\PC{0,40}") {
        let _ = parse(&s, &OperatorSet::default());
    }
}
