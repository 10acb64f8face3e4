//! Columnar evaluation with total ("safe") arithmetic.
//!
//! * division, and `reciprocal`, yield NaN when `|denominator| < 1e-12`
//! * `log(x)` is `ln(max(|x|, 1e-12))`
//! * `sqrt(x)` is `sqrt(|x|)`
//! * any operator result that is `±inf` becomes NaN on the spot
//!
//! NaN is therefore the only sentinel that can leave the evaluator.

use super::ast::TransformExpr;
use super::ops::{BinaryOp, UnaryOp};

pub const SAFE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("feature f{index} does not exist (table has {columns} columns)")]
    FeatureOutOfRange { index: usize, columns: usize },
}

/// Output column plus bookkeeping about unsafe inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub values: Vec<f64>,
    /// Rows whose final value is NaN.
    pub non_finite: usize,
    /// Rows where a `log` argument was clamped to the safety floor.
    pub clamped: usize,
}

impl Evaluation {
    pub fn nan_fraction(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.non_finite as f64 / self.values.len() as f64
        }
    }
}

#[inline]
fn finite_or_nan(x: f64) -> f64 {
    if x.is_infinite() {
        f64::NAN
    } else {
        x
    }
}

#[inline]
fn apply_binary(op: BinaryOp, a: f64, b: f64) -> f64 {
    let v = match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b.abs() < SAFE_EPSILON {
                f64::NAN
            } else {
                a / b
            }
        }
    };
    finite_or_nan(v)
}

/// Returns the value and whether the log floor engaged.
#[inline]
fn apply_unary(op: UnaryOp, x: f64) -> (f64, bool) {
    let mut clamped = false;
    let v = match op {
        UnaryOp::Log => {
            let mag = x.abs();
            if mag < SAFE_EPSILON {
                clamped = true;
                SAFE_EPSILON.ln()
            } else {
                mag.ln()
            }
        }
        UnaryOp::Sqrt => x.abs().sqrt(),
        UnaryOp::Square => x * x,
        UnaryOp::Abs => x.abs(),
        UnaryOp::Reciprocal => {
            if x.abs() < SAFE_EPSILON {
                f64::NAN
            } else {
                1.0 / x
            }
        }
        UnaryOp::Sin => x.sin(),
        UnaryOp::Cos => x.cos(),
        UnaryOp::Tanh => x.tanh(),
    };
    (finite_or_nan(v), clamped)
}

/// Evaluates `expr` over `columns`, where `f1` is `columns[0]`.
///
/// Every column must have the same length; the output has that length.
pub fn evaluate<C: AsRef<[f64]>>(
    expr: &TransformExpr,
    columns: &[C],
) -> Result<Evaluation, EvalError> {
    let max = expr.max_feature();
    if max > columns.len() {
        return Err(EvalError::FeatureOutOfRange {
            index: max,
            columns: columns.len(),
        });
    }
    let rows = columns.first().map_or(0, |c| c.as_ref().len());
    let mut clamp_mask = vec![false; rows];
    let values = eval_node(expr, columns, &mut clamp_mask);
    Ok(Evaluation {
        non_finite: values.iter().filter(|v| v.is_nan()).count(),
        clamped: clamp_mask.iter().filter(|&&c| c).count(),
        values,
    })
}

fn eval_node<C: AsRef<[f64]>>(
    expr: &TransformExpr,
    columns: &[C],
    clamp_mask: &mut [bool],
) -> Vec<f64> {
    match expr {
        TransformExpr::Feature(i) => columns[*i - 1]
            .as_ref()
            .iter()
            .map(|&x| finite_or_nan(x))
            .collect(),
        TransformExpr::Unary(op, child) => {
            let mut values = eval_node(child, columns, clamp_mask);
            for (v, flag) in values.iter_mut().zip(clamp_mask.iter_mut()) {
                let (out, clamped) = apply_unary(*op, *v);
                *v = out;
                *flag |= clamped;
            }
            values
        }
        TransformExpr::Binary(op, left, right) => {
            let mut lhs = eval_node(left, columns, clamp_mask);
            let rhs = eval_node(right, columns, clamp_mask);
            for (a, b) in lhs.iter_mut().zip(rhs) {
                *a = apply_binary(*op, *a, b);
            }
            lhs
        }
    }
}
