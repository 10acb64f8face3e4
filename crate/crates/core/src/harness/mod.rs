//! Downstream evaluation: small in-repo classifiers trained on the original
//! and the transformed table over identical seeded splits.
//!
//! This is the only part of the crate that reads labels.

mod forest;
mod knn;
mod timing;
mod tree;

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use forest::{ForestParams, RandomForest};
pub use knn::{Knn, KnnParams};
pub use timing::{timing_profile, TimingProfile};
pub use tree::{DecisionTree, TreeParams};

use crate::dataset::{split_indices, FeatureTable, LabeledSplit, SplitError};
use tree::Samples;

pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
pub const DEFAULT_TEST_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    Knn(KnnParams),
}

impl ClassifierSpec {
    pub fn tree() -> Self {
        ClassifierSpec::DecisionTree(TreeParams::default())
    }

    pub fn forest() -> Self {
        ClassifierSpec::RandomForest(ForestParams::default())
    }

    pub fn knn() -> Self {
        ClassifierSpec::Knn(KnnParams::default())
    }

    pub fn label(&self) -> &'static str {
        match self {
            ClassifierSpec::DecisionTree(_) => "DT",
            ClassifierSpec::RandomForest(_) => "RF",
            ClassifierSpec::Knn(_) => "KNN",
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let ok = match self {
            ClassifierSpec::DecisionTree(t) => t.max_depth >= 1 && t.min_samples_leaf >= 1,
            ClassifierSpec::RandomForest(f) => {
                f.n_trees >= 1
                    && f.tree.max_depth >= 1
                    && f.tree.min_samples_leaf >= 1
                    && f.max_features != Some(0)
            }
            ClassifierSpec::Knn(k) => k.k >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(EvalError::InvalidSpec(format!("{self:?}")))
        }
    }

    fn with_seed_offset(self, offset: u64) -> Self {
        match self {
            ClassifierSpec::RandomForest(mut f) => {
                f.seed = f.seed.wrapping_add(offset);
                ClassifierSpec::RandomForest(f)
            }
            other => other,
        }
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ClassifierSpec {
    type Err = EvalError;

    /// Accepts `dt`, `rf` or `knn` (and the long names) with default
    /// hyperparameters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dt" | "tree" | "decision_tree" => Ok(ClassifierSpec::tree()),
            "rf" | "forest" | "random_forest" => Ok(ClassifierSpec::forest()),
            "knn" => Ok(ClassifierSpec::knn()),
            other => Err(EvalError::InvalidSpec(format!(
                "unknown model `{other}`; expected dt, rf or knn"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("invalid classifier: {0}")]
    InvalidSpec(String),
    #[error("{what} has {got} rows but {expected} labels were given")]
    RowMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("train and test tables have {train} and {test} columns")]
    ColumnMismatch { train: usize, test: usize },
    #[error("test set is empty")]
    EmptyTest,
    #[error("no seeds given")]
    NoSeeds,
    #[error(transparent)]
    Split(#[from] SplitError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub predictions: Vec<usize>,
    pub accuracy: f64,
    /// The training set held a single class, which is always predicted.
    pub degenerate: bool,
}

enum Model {
    Constant(usize),
    Tree(DecisionTree),
    Forest(RandomForest),
    Knn(Knn),
}

impl Model {
    fn predict_row(&self, row: &[f64]) -> usize {
        match self {
            Model::Constant(c) => *c,
            Model::Tree(t) => t.predict_row(row),
            Model::Forest(f) => f.predict_row(row),
            Model::Knn(k) => k.predict_row(row),
        }
    }
}

/// Fits `spec` on the training part and scores it on the test part.
pub fn train_predict(spec: &ClassifierSpec, split: &LabeledSplit) -> Result<Prediction, EvalError> {
    spec.validate()?;
    let (train, test) = (&split.train, &split.test);
    if train.table.n_cols() != test.table.n_cols() {
        return Err(EvalError::ColumnMismatch {
            train: train.table.n_cols(),
            test: test.table.n_cols(),
        });
    }
    for (what, part) in [("train", train), ("test", test)] {
        if part.table.n_rows() != part.labels.len() {
            return Err(EvalError::RowMismatch {
                what,
                got: part.table.n_rows(),
                expected: part.labels.len(),
            });
        }
    }
    if test.labels.is_empty() {
        return Err(EvalError::EmptyTest);
    }
    let n_classes = train
        .labels
        .iter()
        .chain(&test.labels)
        .max()
        .map_or(1, |m| m + 1);
    let samples = Samples {
        columns: train.table.value_slices(),
        labels: &train.labels,
        n_classes,
    };
    let first = train.labels.first().copied().unwrap_or(0);
    let degenerate = train.labels.iter().all(|&l| l == first);
    let model = if degenerate {
        Model::Constant(first)
    } else {
        match spec {
            ClassifierSpec::DecisionTree(p) => {
                let rows: Vec<usize> = (0..train.labels.len()).collect();
                Model::Tree(DecisionTree::fit(&samples, &rows, p, None))
            }
            ClassifierSpec::RandomForest(p) => Model::Forest(RandomForest::fit(&samples, p)),
            ClassifierSpec::Knn(p) => Model::Knn(Knn::fit(&samples, p)),
        }
    };
    let predictions: Vec<usize> = (0..test.table.n_rows())
        .map(|r| model.predict_row(&test.table.row(r)))
        .collect();
    let correct = predictions
        .iter()
        .zip(&test.labels)
        .filter(|(p, y)| p == y)
        .count();
    Ok(Prediction {
        accuracy: correct as f64 / test.labels.len() as f64,
        predictions,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    Transformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub accuracy: f64,
    /// Wall-clock seconds to fit and predict.
    pub train_predict_secs: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub variant: Variant,
    pub model: String,
    pub columns: usize,
    pub mean_accuracy: f64,
    pub runs: Vec<SeedRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDescriptor {
    pub test_fraction: f64,
    pub seeds: Vec<u64>,
    pub train_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: usize,
    pub split: SplitDescriptor,
    pub cells: Vec<Cell>,
    /// Seconds spent producing the transformed table, when known.
    pub transform_secs: Option<f64>,
}

impl EvalReport {
    pub fn cell(&self, variant: Variant, model: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.variant == variant && c.model == model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table with one row per model.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let cols = |v| {
            self.cells
                .iter()
                .find(|c| c.variant == v)
                .map_or(0, |c| c.columns)
        };
        writeln!(
            out,
            "rows={} train={} test={} seeds={} columns: original={} transformed={}",
            self.rows,
            self.split.train_rows,
            self.split.test_rows,
            self.split.seeds.len(),
            cols(Variant::Original),
            cols(Variant::Transformed)
        )
        .unwrap();
        writeln!(
            out,
            "{:<6} {:>9} {:>12} {:>8}",
            "model", "original", "transformed", "delta"
        )
        .unwrap();
        let mut models: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !models.contains(&c.model.as_str()) {
                models.push(&c.model);
            }
        }
        for m in models {
            let acc = |v| self.cell(v, m).map(|c| c.mean_accuracy);
            let (o, t) = (acc(Variant::Original), acc(Variant::Transformed));
            let fmt = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.4}"));
            let delta = match (o, t) {
                (Some(o), Some(t)) => format!("{:+.4}", t - o),
                _ => "-".into(),
            };
            writeln!(out, "{m:<6} {:>9} {:>12} {delta:>8}", fmt(o), fmt(t)).unwrap();
        }
        out
    }
}

/// Scores every spec on both tables over the same stratified split per
/// seed. Forest seeds are offset by the split seed.
pub fn compare(
    original: &FeatureTable,
    transformed: &FeatureTable,
    labels: &[usize],
    specs: &[ClassifierSpec],
    seeds: &[u64],
    test_fraction: f64,
) -> Result<EvalReport, EvalError> {
    if seeds.is_empty() {
        return Err(EvalError::NoSeeds);
    }
    for (what, t) in [
        ("original table", original),
        ("transformed table", transformed),
    ] {
        if t.n_rows() != labels.len() {
            return Err(EvalError::RowMismatch {
                what,
                got: t.n_rows(),
                expected: labels.len(),
            });
        }
    }
    for s in specs {
        s.validate()?;
    }
    let splits = seeds
        .iter()
        .map(|&s| split_indices(labels, test_fraction, s))
        .collect::<Result<Vec<_>, _>>()?;

    let mut cells = Vec::new();
    for (variant, table) in [
        (Variant::Original, original),
        (Variant::Transformed, transformed),
    ] {
        let materialized: Vec<LabeledSplit> = splits
            .iter()
            .map(|idx| LabeledSplit::from_indices(table, labels, idx.clone()))
            .collect();
        for spec in specs {
            let mut runs = Vec::with_capacity(seeds.len());
            for split in &materialized {
                let clock = Instant::now();
                let p = train_predict(&spec.with_seed_offset(split.seed()), split)?;
                runs.push(SeedRun {
                    seed: split.seed(),
                    accuracy: p.accuracy,
                    train_predict_secs: clock.elapsed().as_secs_f64(),
                    degenerate: p.degenerate,
                });
            }
            let mean_accuracy = runs.iter().map(|r| r.accuracy).sum::<f64>() / runs.len() as f64;
            cells.push(Cell {
                variant,
                model: spec.label().to_string(),
                columns: table.n_cols(),
                mean_accuracy,
                runs,
            });
        }
    }
    Ok(EvalReport {
        rows: labels.len(),
        split: SplitDescriptor {
            test_fraction,
            seeds: seeds.to_vec(),
            train_rows: splits[0].train.len(),
            test_rows: splits[0].test.len(),
        },
        cells,
        transform_secs: None,
    })
}
