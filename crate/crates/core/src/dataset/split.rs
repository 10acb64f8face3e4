use serde::{Deserialize, Serialize};

use super::table::FeatureTable;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SplitError {
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(String),
    #[error("class {class} has {count} rows; at least 2 are required")]
    DegenerateClass { class: usize, count: usize },
    #[error("{labels} labels for {rows} rows")]
    LengthMismatch { labels: usize, rows: usize },
}

/// Row indices of a stratified train/test partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPart {
    pub table: FeatureTable,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSplit {
    pub train: SplitPart,
    pub test: SplitPart,
    pub indices: SplitIndices,
}

impl LabeledSplit {
    pub fn seed(&self) -> u64 {
        self.indices.seed
    }

    /// Materializes a table/labels pair along precomputed indices.
    pub fn from_indices(table: &FeatureTable, labels: &[usize], indices: SplitIndices) -> Self {
        let part = |rows: &[usize]| SplitPart {
            table: table.select_rows(rows),
            labels: rows.iter().map(|&r| labels[r]).collect(),
        };
        LabeledSplit {
            train: part(&indices.train),
            test: part(&indices.test),
            indices,
        }
    }
}

/// Stratified split of `labels` into train and test row indices.
///
/// The total test size is `round(n * test_fraction)`, apportioned across
/// classes by largest remainder (ties to the lower class index), with at
/// least one row per class left for training. Rows of each class are
/// shuffled with SplitMix64 seeded by `seed`, class by class in ascending
/// class order, and the first rows of each shuffle go to test. Both index
/// lists are returned sorted.
pub fn split_indices(
    labels: &[usize],
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices, SplitError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(SplitError::InvalidFraction(test_fraction.to_string()));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (row, &class) in labels.iter().enumerate() {
        by_class[class].push(row);
    }
    for (class, rows) in by_class.iter().enumerate() {
        if rows.len() < 2 {
            return Err(SplitError::DegenerateClass {
                class,
                count: rows.len(),
            });
        }
    }

    let total_test = (labels.len() as f64 * test_fraction).round() as usize;
    let ideal: Vec<f64> = by_class
        .iter()
        .map(|r| r.len() as f64 * test_fraction)
        .collect();
    let mut quota: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..n_classes).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = total_test.saturating_sub(quota.iter().sum());
    for &c in order.iter().cycle().take(n_classes * 2) {
        if remaining == 0 {
            break;
        }
        if quota[c] + 1 < by_class[c].len() {
            quota[c] += 1;
            remaining -= 1;
        }
    }
    for (q, rows) in quota.iter_mut().zip(&by_class) {
        *q = (*q).min(rows.len() - 1);
    }

    let mut rng = SplitMix64::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (rows, &q) in by_class.iter_mut().zip(&quota) {
        rng.shuffle(rows);
        test.extend_from_slice(&rows[..q]);
        train.extend_from_slice(&rows[q..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test, seed })
}

/// Seeded stratified split of a table and its labels.
pub fn split(
    table: &FeatureTable,
    labels: &[usize],
    test_fraction: f64,
    seed: u64,
) -> Result<LabeledSplit, SplitError> {
    if labels.len() != table.n_rows() {
        return Err(SplitError::LengthMismatch {
            labels: labels.len(),
            rows: table.n_rows(),
        });
    }
    let indices = split_indices(labels, test_fraction, seed)?;
    Ok(LabeledSplit::from_indices(table, labels, indices))
}
