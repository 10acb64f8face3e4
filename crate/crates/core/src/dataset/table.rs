use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::expr::{canonical_key, evaluate, EvalError, Evaluation, TransformExpr};

/// Where a column came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Generated {
        expr: TransformExpr,
        /// Refinement round that produced the column, if any.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        round: Option<usize>,
    },
}

impl Provenance {
    pub fn is_original(&self) -> bool {
        matches!(self, Provenance::Original)
    }

    pub fn expr(&self) -> Option<&TransformExpr> {
        match self {
            Provenance::Original => None,
            Provenance::Generated { expr, .. } => Some(expr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    /// Fraction of cells that were missing (or NaN) before imputation.
    pub missing_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("table has no columns")]
    NoColumns,
    #[error("table has no rows")]
    NoRows,
    #[error("column `{name}` has {got} rows, expected {expected}")]
    Ragged {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("duplicate column name `{0}`")]
    DuplicateName(String),
    #[error("original column `{0}` follows a generated column")]
    OriginalAfterGenerated(String),
}

/// Columnar numeric feature space. Immutable once built; every
/// transformation returns a new table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    columns: Vec<Column>,
}

impl FeatureTable {
    pub fn new(columns: Vec<Column>) -> Result<Self, TableError> {
        let first = columns.first().ok_or(TableError::NoColumns)?;
        let rows = first.values.len();
        if rows == 0 {
            return Err(TableError::NoRows);
        }
        let mut seen = HashSet::new();
        let mut generated_seen = false;
        for col in &columns {
            if col.values.len() != rows {
                return Err(TableError::Ragged {
                    name: col.name.clone(),
                    got: col.values.len(),
                    expected: rows,
                });
            }
            if !seen.insert(col.name.as_str()) {
                return Err(TableError::DuplicateName(col.name.clone()));
            }
            match col.provenance {
                Provenance::Original if generated_seen => {
                    return Err(TableError::OriginalAfterGenerated(col.name.clone()))
                }
                Provenance::Original => {}
                Provenance::Generated { .. } => generated_seen = true,
            }
        }
        Ok(FeatureTable { columns })
    }

    /// Builds a table of original columns with no missing cells.
    pub fn from_columns(names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, TableError> {
        FeatureTable::new(
            names
                .into_iter()
                .zip(values)
                .map(|(name, values)| Column {
                    name,
                    values,
                    provenance: Provenance::Original,
                    missing_fraction: 0.0,
                })
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn original_count(&self) -> usize {
        self.columns
            .iter()
            .take_while(|c| c.provenance.is_original())
            .count()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    /// Column by 0-based position.
    pub fn column(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn value_slices(&self) -> Vec<&[f64]> {
        self.columns.iter().map(|c| c.values.as_slice()).collect()
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.values[r]).collect()
    }

    /// Dedup key of the column at 0-based `index`: `f{index+1}` for an
    /// original column, the canonical expression key otherwise.
    pub fn key(&self, index: usize) -> String {
        match &self.columns[index].provenance {
            Provenance::Original => format!("f{}", index + 1),
            Provenance::Generated { expr, .. } => canonical_key(expr),
        }
    }

    pub fn evaluate(&self, expr: &TransformExpr) -> Result<Evaluation, EvalError> {
        evaluate(expr, &self.value_slices())
    }

    /// New table with only `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        FeatureTable {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: rows.iter().map(|&r| c.values[r]).collect(),
                    provenance: c.provenance.clone(),
                    missing_fraction: c.missing_fraction,
                })
                .collect(),
        }
    }

    /// New table restricted to the first `n` columns.
    pub fn prefix(&self, n: usize) -> FeatureTable {
        FeatureTable {
            columns: self.columns[..n.clamp(1, self.columns.len())].to_vec(),
        }
    }

    pub(crate) fn with_column(&self, column: Column) -> FeatureTable {
        let mut columns = self.columns.clone();
        columns.push(column);
        FeatureTable { columns }
    }
}

/// Median of the finite values, or `None` when there are none.
pub(crate) fn finite_median(values: &[f64]) -> Option<f64> {
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return None;
    }
    finite.sort_by(f64::total_cmp);
    let n = finite.len();
    Some(if n % 2 == 1 {
        finite[n / 2]
    } else {
        (finite[n / 2 - 1] + finite[n / 2]) / 2.0
    })
}
