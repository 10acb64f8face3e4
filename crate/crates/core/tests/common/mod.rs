//! Test-only helpers: a tiny seeded RNG, random expression trees, a naive
//! row-at-a-time reference interpreter and synthetic datasets.
#![allow(dead_code)]

use duet_core::dataset::{DatasetMeta, FeatureDescription, FeatureTable};
use duet_core::expr::{BinaryOp, TransformExpr, UnaryOp};

/// xorshift64*; deliberately not the crate's own generator.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Box-Muller standard normal.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.unit().max(1e-300);
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

const BINARY: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];
const UNARY: [UnaryOp; 8] = [
    UnaryOp::Log,
    UnaryOp::Sqrt,
    UnaryOp::Square,
    UnaryOp::Abs,
    UnaryOp::Reciprocal,
    UnaryOp::Sin,
    UnaryOp::Cos,
    UnaryOp::Tanh,
];

/// Random tree of height at most `max_depth` over `f1..=f{features}`.
pub fn random_expr(rng: &mut TestRng, max_depth: usize, features: usize) -> TransformExpr {
    if max_depth <= 1 || rng.below(4) == 0 {
        return TransformExpr::Feature(1 + rng.below(features));
    }
    if rng.below(3) == 0 {
        let op = UNARY[rng.below(UNARY.len())];
        TransformExpr::Unary(op, Box::new(random_expr(rng, max_depth - 1, features)))
    } else {
        let op = BINARY[rng.below(BINARY.len())];
        TransformExpr::Binary(
            op,
            Box::new(random_expr(rng, max_depth - 1, features)),
            Box::new(random_expr(rng, max_depth - 1, features)),
        )
    }
}

/// Randomly swaps operands of `+` and `*` nodes.
pub fn commute_randomly(rng: &mut TestRng, e: &TransformExpr) -> TransformExpr {
    match e {
        TransformExpr::Feature(i) => TransformExpr::Feature(*i),
        TransformExpr::Unary(op, c) => {
            TransformExpr::Unary(*op, Box::new(commute_randomly(rng, c)))
        }
        TransformExpr::Binary(op, l, r) => {
            let l = commute_randomly(rng, l);
            let r = commute_randomly(rng, r);
            let swap = matches!(op, BinaryOp::Add | BinaryOp::Mul) && rng.below(2) == 0;
            if swap {
                TransformExpr::Binary(*op, Box::new(r), Box::new(l))
            } else {
                TransformExpr::Binary(*op, Box::new(l), Box::new(r))
            }
        }
    }
}

/// Straight transcription of the safe-arithmetic rules, one row at a time.
pub fn reference_eval(e: &TransformExpr, row: &[f64]) -> f64 {
    let v = match e {
        TransformExpr::Feature(i) => row[*i - 1],
        TransformExpr::Unary(op, c) => {
            let x = reference_eval(c, row);
            match op {
                UnaryOp::Log => x.abs().max(1e-12).ln(),
                UnaryOp::Sqrt => x.abs().sqrt(),
                UnaryOp::Square => x.powi(2),
                UnaryOp::Abs => x.abs(),
                UnaryOp::Reciprocal => {
                    if x.abs() < 1e-12 {
                        f64::NAN
                    } else {
                        1.0 / x
                    }
                }
                UnaryOp::Sin => x.sin(),
                UnaryOp::Cos => x.cos(),
                UnaryOp::Tanh => x.tanh(),
            }
        }
        TransformExpr::Binary(op, l, r) => {
            let a = reference_eval(l, row);
            let b = reference_eval(r, row);
            match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => {
                    if b.abs() < 1e-12 {
                        f64::NAN
                    } else {
                        a / b
                    }
                }
            }
        }
    };
    if v.is_infinite() {
        f64::NAN
    } else {
        v
    }
}

pub fn random_columns(rng: &mut TestRng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..cols)
        .map(|c| {
            (0..rows)
                .map(|_| match c % 3 {
                    0 => rng.normal() * 3.0,
                    1 => rng.uniform(-10.0, 10.0),
                    // sprinkle exact zeros to exercise the safe paths
                    _ => {
                        if rng.below(10) == 0 {
                            0.0
                        } else {
                            rng.uniform(0.0, 100.0)
                        }
                    }
                })
                .collect()
        })
        .collect()
}

pub fn meta_for(names: &[&str]) -> DatasetMeta {
    DatasetMeta {
        task_description: "Synthetic classification task".into(),
        target_name: "label".into(),
        feature_descriptions: names
            .iter()
            .map(|n| FeatureDescription {
                name: n.to_string(),
                description: format!("synthetic column {n}"),
            })
            .collect(),
    }
}

pub fn table_from(names: &[&str], columns: Vec<Vec<f64>>) -> FeatureTable {
    FeatureTable::from_columns(names.iter().map(|s| s.to_string()).collect(), columns).unwrap()
}

/// `rows` points with f1, f2 uniform on [-1, 1] and `noise` extra uniform
/// columns; the label is `f1 * f2 > 0`.
pub fn xor_of_signs(
    seed: u64,
    rows: usize,
    noise: usize,
) -> (FeatureTable, Vec<usize>, DatasetMeta) {
    let mut rng = TestRng::new(seed);
    let cols = 2 + noise;
    let mut columns = vec![Vec::with_capacity(rows); cols];
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut row: Vec<f64> = (0..cols).map(|_| rng.uniform(-1.0, 1.0)).collect();
        // keep points off the axes so the sign is unambiguous
        for v in row.iter_mut().take(2) {
            if v.abs() < 1e-3 {
                *v = 1e-3f64.copysign(*v);
            }
        }
        labels.push(usize::from(row[0] * row[1] > 0.0));
        for (c, v) in row.into_iter().enumerate() {
            columns[c].push(v);
        }
    }
    let names: Vec<String> = (0..cols)
        .map(|c| {
            if c < 2 {
                format!("x{}", c + 1)
            } else {
                format!("noise{}", c - 1)
            }
        })
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    (table_from(&refs, columns), labels, meta_for(&refs))
}

/// Two Gaussian blobs in `dims` dimensions, centres at -2 and +2.
pub fn gaussian_blobs(seed: u64, rows: usize, dims: usize) -> (FeatureTable, Vec<usize>) {
    let mut rng = TestRng::new(seed);
    let mut columns = vec![Vec::with_capacity(rows); dims];
    let mut labels = Vec::with_capacity(rows);
    for r in 0..rows {
        let class = r % 2;
        let centre = if class == 0 { -2.0 } else { 2.0 };
        for col in columns.iter_mut() {
            col.push(centre + rng.normal());
        }
        labels.push(class);
    }
    let names: Vec<String> = (0..dims).map(|d| format!("g{}", d + 1)).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    (table_from(&refs, columns), labels)
}
