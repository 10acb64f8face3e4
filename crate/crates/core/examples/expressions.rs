//! Parse a feature-operator sequence, print its canonical form and evaluate
//! it over a small table.

use duet_core::expr::{canonical_key, evaluate, parse, render, OperatorSet};

fn main() {
    let ops = OperatorSet::default();
    let seq = parse("(f2*f1),log(f3),(f1/f2)", &ops).expect("valid sequence");
    println!("rendered:  {}", render(&seq));
    let canonical: Vec<String> = seq.iter().map(canonical_key).collect();
    println!("canonical: {}", canonical.join(","));

    let columns = vec![
        vec![1.0, 2.0, 3.0],
        vec![4.0, 0.0, 6.0],
        vec![10.0, 100.0, 0.0],
    ];
    for expr in seq.iter() {
        let out = evaluate(expr, &columns).expect("features exist");
        println!(
            "{expr:>10} -> {:?} ({} NaN, {} clamped)",
            out.values, out.non_finite, out.clamped
        );
    }

    match parse("f1**f2", &ops) {
        Ok(_) => unreachable!(),
        Err(e) => println!("\n{}", e.annotate("f1**f2")),
    }
}
