use serde::{Deserialize, Serialize};

use super::tree::{majority, DecisionTree, FeatureSampler, Samples, TreeParams};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            tree: TreeParams::default(),
            max_features: None,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn features_per_split(&self, d: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d.max(1))
    }
}

/// Bagged CART ensemble.
///
/// Training rows are first put in a canonical order (lexicographic on
/// feature values, then label), so the ensemble does not depend on the
/// order rows arrive in. Tree `t` draws its bootstrap sample and its
/// per-split feature subsets from a SplitMix64 seeded with the `t`-th output
/// of a SplitMix64 seeded with `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_classes: usize,
}

impl RandomForest {
    pub(crate) fn fit(samples: &Samples, params: &ForestParams) -> Self {
        let n = samples.labels.len();
        let mut canonical: Vec<usize> = (0..n).collect();
        canonical.sort_by(|&a, &b| {
            samples
                .columns
                .iter()
                .map(|c| c[a].total_cmp(&c[b]))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(samples.labels[a].cmp(&samples.labels[b]))
        });
        let per_split = params.features_per_split(samples.columns.len());
        let mut master = SplitMix64::new(params.seed);
        let seeds: Vec<u64> = (0..params.n_trees.max(1))
            .map(|_| master.next_u64())
            .collect();
        let trees = seeds
            .into_iter()
            .map(|seed| {
                let mut rng = SplitMix64::new(seed);
                let rows: Vec<usize> = (0..n).map(|_| canonical[rng.below(n)]).collect();
                let sampler = FeatureSampler {
                    rng: &mut rng,
                    per_split,
                };
                DecisionTree::fit(samples, &rows, &params.tree, Some(sampler))
            })
            .collect();
        RandomForest {
            trees,
            n_classes: samples.n_classes,
        }
    }

    /// Majority vote; ties go to the lowest class.
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut votes = vec![0; self.n_classes];
        for t in &self.trees {
            votes[t.predict_row(row)] += 1;
        }
        majority(&votes)
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}
