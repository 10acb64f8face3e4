//! Distribution summary of a feature space.
//!
//! This is what the critic is shown instead of raw rows: per-column moments,
//! pairwise absolute Pearson correlation and a list of near-constant columns.
//! Only feature values are read. Sums are taken over sorted terms, so row
//! order never changes a single bit of the output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureTable;

/// Standard deviation below which a column is reported as constant.
pub const LOW_VARIANCE_STD: f64 = 1e-8;
/// At most this many correlated pairs are kept.
pub const MAX_PAIRS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    /// 0-based column position; the token is `f{index + 1}`.
    pub index: usize,
    pub name: String,
    pub mean: f64,
    /// Population (1/n) standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Fisher skewness without bias correction; 0 for constant columns.
    pub skewness: f64,
    pub distinct_count: usize,
    pub nan_fraction: f64,
}

impl FeatureStats {
    pub fn token(&self) -> String {
        format!("f{}", self.index + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedPair {
    pub i: usize,
    pub j: usize,
    pub abs_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceStats {
    pub row_count: usize,
    pub column_count: usize,
    /// Symmetric |r| matrix with unit diagonal.
    pub correlation: Vec<Vec<f64>>,
    /// Sorted by |r| descending, then by `(i, j)`.
    pub top_correlated_pairs: Vec<CorrelatedPair>,
    pub low_variance_features: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub features: Vec<FeatureStats>,
    pub space: SpaceStats,
}

fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

struct Centered {
    mean: f64,
    std: f64,
    deviations: Vec<f64>,
}

fn center(values: &[f64]) -> Centered {
    let n = values.len() as f64;
    let mean = sorted_sum(values.to_vec()) / n;
    let deviations: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let var = sorted_sum(deviations.iter().map(|d| d * d).collect()) / n;
    Centered {
        mean,
        std: var.sqrt(),
        deviations,
    }
}

fn column_stats(
    index: usize,
    name: &str,
    values: &[f64],
    nan_fraction: f64,
    c: &Centered,
) -> FeatureStats {
    let n = values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let skewness = if c.std < LOW_VARIANCE_STD {
        0.0
    } else {
        let m2 = c.std * c.std;
        let m3 = sorted_sum(c.deviations.iter().map(|d| d * d * d).collect()) / n;
        m3 / m2.powf(1.5)
    };
    let mut bits: Vec<f64> = values
        .iter()
        .map(|&v| if v == 0.0 { 0.0 } else { v })
        .collect();
    bits.sort_by(f64::total_cmp);
    bits.dedup_by(|a, b| a.total_cmp(b).is_eq());
    FeatureStats {
        index,
        name: name.to_string(),
        mean: c.mean.clamp(min, max),
        std: c.std,
        min,
        max,
        skewness,
        distinct_count: bits.len(),
        nan_fraction,
    }
}

/// Computes per-column and pairwise statistics of `table`.
pub fn summarize(table: &FeatureTable) -> Summary {
    let centered: Vec<Centered> = table.columns().iter().map(|c| center(&c.values)).collect();
    let features: Vec<FeatureStats> = table
        .columns()
        .iter()
        .zip(&centered)
        .enumerate()
        .map(|(i, (col, c))| column_stats(i, &col.name, &col.values, col.missing_fraction, c))
        .collect();

    let d = table.n_cols();
    let n = table.n_rows() as f64;
    let mut correlation = vec![vec![0.0; d]; d];
    let mut pairs = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for i in 0..d {
        correlation[i][i] = 1.0;
        for j in i + 1..d {
            let (a, b) = (&centered[i], &centered[j]);
            let r = if a.std < LOW_VARIANCE_STD || b.std < LOW_VARIANCE_STD {
                0.0
            } else {
                let cov = sorted_sum(
                    a.deviations
                        .iter()
                        .zip(&b.deviations)
                        .map(|(x, y)| x * y)
                        .collect(),
                ) / n;
                (cov / (a.std * b.std)).abs().min(1.0)
            };
            correlation[i][j] = r;
            correlation[j][i] = r;
            pairs.push(CorrelatedPair { i, j, abs_r: r });
        }
    }
    pairs.sort_by(|p, q| {
        q.abs_r
            .total_cmp(&p.abs_r)
            .then((p.i, p.j).cmp(&(q.i, q.j)))
    });
    pairs.truncate(MAX_PAIRS);

    let low_variance_features = features
        .iter()
        .filter(|f| f.std < LOW_VARIANCE_STD)
        .map(|f| f.index)
        .collect();

    Summary {
        features,
        space: SpaceStats {
            row_count: table.n_rows(),
            column_count: d,
            correlation,
            top_correlated_pairs: pairs,
            low_variance_features,
        },
    }
}

/// Formats `x` with four significant digits.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x == 0.0 {
            "0".into()
        } else {
            format!("{x}")
        };
    }
    // round first so the digit count is taken from the rounded value
    let rounded: f64 = format!("{x:.3e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-3..1e5).contains(&mag) {
        let decimals = (3 - mag.log10().floor() as i32).max(0) as usize;
        format!("{rounded:.decimals$}")
    } else {
        format!("{rounded:.3e}")
    }
}

pub(crate) const STATS_HEADER: &str =
    "feature       mean        std        min        max       skew  distinct  missing";
pub(crate) const PAIRS_HEADER: &str = "most correlated pairs (|r|):";
pub(crate) const LOW_VARIANCE_PREFIX: &str = "low variance:";

/// Compact fixed-layout text for prompts. Lines stay under 120 characters
/// and equal summaries always render to identical text.
pub fn render_stats(summary: &Summary) -> String {
    let mut out = String::new();
    let s = &summary.space;
    writeln!(out, "rows={} columns={}", s.row_count, s.column_count).unwrap();
    writeln!(out, "{STATS_HEADER}").unwrap();
    for f in &summary.features {
        let mut line = format!(
            "{:<7} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9} {:>7.1}%",
            f.token(),
            sig4(f.mean),
            sig4(f.std),
            sig4(f.min),
            sig4(f.max),
            sig4(f.skewness),
            f.distinct_count,
            f.nan_fraction * 100.0
        );
        if s.low_variance_features.contains(&f.index) {
            line.push_str("  constant");
        }
        out.push_str(&line);
        out.push('\n');
    }
    writeln!(out, "{PAIRS_HEADER}").unwrap();
    if s.top_correlated_pairs.is_empty() {
        out.push_str("(none)\n");
    }
    for p in &s.top_correlated_pairs {
        writeln!(out, "f{}~f{} {}", p.i + 1, p.j + 1, sig4(p.abs_r)).unwrap();
    }
    let low: Vec<String> = s
        .low_variance_features
        .iter()
        .map(|i| format!("f{}", i + 1))
        .collect();
    writeln!(
        out,
        "{LOW_VARIANCE_PREFIX} {}",
        if low.is_empty() {
            "none".to_string()
        } else {
            low.join(", ")
        }
    )
    .unwrap();
    out
}
