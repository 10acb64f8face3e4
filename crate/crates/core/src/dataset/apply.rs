use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::table::{finite_median, Column, FeatureTable, Provenance};
use crate::expr::{canonical_key, render_expr, EvalError, TransformExpr, TransformSequence};

/// Thresholds deciding whether a generated column is kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptancePolicy {
    /// Reject when more than this fraction of rows evaluate to NaN.
    pub max_nan_fraction: f64,
    /// Total columns may not exceed `budget_multiplier * original columns`.
    pub budget_multiplier: usize,
    /// Population standard deviation below which a column counts as constant.
    pub min_std: f64,
}

impl Default for AcceptancePolicy {
    fn default() -> Self {
        AcceptancePolicy {
            max_nan_fraction: 0.10,
            budget_multiplier: 4,
            min_std: 1e-12,
        }
    }
}

impl AcceptancePolicy {
    pub fn budget(&self, original_columns: usize) -> usize {
        self.budget_multiplier.max(1) * original_columns
    }
}

/// Why a proposed feature was dropped. Checked in declaration order; the
/// first failing check is the reported reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    OutOfRange,
    TooManyNan,
    ZeroVariance,
    Duplicate,
    OverBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// Position of the expression in the proposed sequence.
    pub position: usize,
    pub expr: String,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplyOutcome {
    pub table: FeatureTable,
    pub accepted: Vec<TransformExpr>,
    pub rejections: Vec<Rejection>,
}

impl ApplyOutcome {
    /// Rejections as JSON Lines.
    pub fn rejections_jsonl(&self) -> String {
        rejections_jsonl(&self.rejections)
    }
}

pub fn rejections_jsonl(rejections: &[Rejection]) -> String {
    rejections
        .iter()
        .map(|r| serde_json::to_string(r).expect("rejection serializes") + "\n")
        .collect()
}

/// Evaluates each expression against the growing table and appends the
/// ones that pass every check.
pub fn apply_sequence(
    table: &FeatureTable,
    seq: &TransformSequence,
    policy: &AcceptancePolicy,
) -> ApplyOutcome {
    apply_exprs(table, seq.exprs(), policy, None)
}

/// Like [`apply_sequence`], tagging accepted columns with a round number.
pub fn apply_exprs(
    table: &FeatureTable,
    exprs: &[TransformExpr],
    policy: &AcceptancePolicy,
    round: Option<usize>,
) -> ApplyOutcome {
    let mut current = table.clone();
    let mut keys: HashSet<String> = (0..table.n_cols()).map(|i| table.key(i)).collect();
    let mut names: HashSet<String> = table.names().map(str::to_string).collect();
    let budget = policy.budget(table.original_count());
    let mut accepted = Vec::new();
    let mut rejections = Vec::new();

    for (position, expr) in exprs.iter().enumerate() {
        let text = render_expr(expr);
        let reject = |reason, detail: String| Rejection {
            position,
            expr: text.clone(),
            reason,
            detail,
        };

        let eval = match current.evaluate(expr) {
            Ok(e) => e,
            Err(EvalError::FeatureOutOfRange { index, columns }) => {
                rejections.push(reject(
                    RejectReason::OutOfRange,
                    format!("f{index} referenced but only {columns} features exist"),
                ));
                continue;
            }
        };
        let nan_fraction = eval.nan_fraction();
        if nan_fraction > policy.max_nan_fraction {
            rejections.push(reject(
                RejectReason::TooManyNan,
                format!("{:.1}% of rows are not a number", nan_fraction * 100.0),
            ));
            continue;
        }
        let std = finite_std(&eval.values);
        if std < policy.min_std {
            rejections.push(reject(
                RejectReason::ZeroVariance,
                "column is constant".into(),
            ));
            continue;
        }
        let key = canonical_key(expr);
        if keys.contains(&key) || names.contains(&text) {
            rejections.push(reject(
                RejectReason::Duplicate,
                format!("equivalent to existing feature `{key}`"),
            ));
            continue;
        }
        if current.n_cols() >= budget {
            rejections.push(reject(
                RejectReason::OverBudget,
                format!("feature budget of {budget} columns reached"),
            ));
            continue;
        }

        let mut values = eval.values;
        if eval.non_finite > 0 {
            let fill = finite_median(&values).unwrap_or(0.0);
            for v in values.iter_mut().filter(|v| v.is_nan()) {
                *v = fill;
            }
        }
        current = current.with_column(Column {
            name: text.clone(),
            values,
            provenance: Provenance::Generated {
                expr: expr.clone(),
                round,
            },
            missing_fraction: nan_fraction,
        });
        keys.insert(key);
        names.insert(text);
        accepted.push(expr.clone());
    }

    ApplyOutcome {
        table: current,
        accepted,
        rejections,
    }
}

fn finite_std(values: &[f64]) -> f64 {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return 0.0;
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    (finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
