use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 8,
            min_samples_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// Column-major training data.
pub(crate) struct Samples<'a> {
    pub columns: Vec<&'a [f64]>,
    pub labels: &'a [usize],
    pub n_classes: usize,
}

/// Lowest class with the highest count.
pub(crate) fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (class, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = class;
        }
    }
    best
}

fn gini_sum(counts: &[usize], n: usize) -> f64 {
    // n * gini = n - sum(c^2) / n
    if n == 0 {
        return 0.0;
    }
    let squares: usize = counts.iter().map(|c| c * c).sum();
    n as f64 - squares as f64 / n as f64
}

/// Per-node feature subsampling for forests.
pub(crate) struct FeatureSampler<'r> {
    pub rng: &'r mut SplitMix64,
    pub per_split: usize,
}

/// Gini CART classifier.
///
/// Candidate thresholds are midpoints between consecutive distinct values;
/// a row goes left when its value is below the threshold. Among equally
/// good splits the lowest feature, then the lowest threshold, wins. Nodes
/// stop splitting when pure, at `max_depth`, or when no split leaves
/// `min_samples_leaf` rows on both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    root: Node,
    n_features: usize,
}

impl DecisionTree {
    pub(crate) fn fit(
        samples: &Samples,
        rows: &[usize],
        params: &TreeParams,
        sampler: Option<FeatureSampler>,
    ) -> Self {
        let mut builder = Builder {
            samples,
            params,
            sampler,
        };
        DecisionTree {
            root: builder.grow(rows.to_vec(), 0),
            n_features: samples.columns.len(),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        debug_assert_eq!(row.len(), self.n_features);
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(class) => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] < *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }
}

struct Builder<'a, 'r> {
    samples: &'a Samples<'a>,
    params: &'a TreeParams,
    sampler: Option<FeatureSampler<'r>>,
}

struct Best {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_, '_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.samples.n_classes];
        for &r in rows {
            counts[self.samples.labels[r]] += 1;
        }
        counts
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.samples.columns.len();
        match &mut self.sampler {
            Some(s) if s.per_split < d => {
                let mut f = s.rng.sample_indices(d, s.per_split);
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> Node {
        let counts = self.counts(&rows);
        let leaf = Node::Leaf(majority(&counts));
        let min_leaf = self.params.min_samples_leaf.max(1);
        if depth >= self.params.max_depth
            || counts.iter().filter(|&&c| c > 0).count() <= 1
            || rows.len() < 2 * min_leaf
        {
            return leaf;
        }
        let features = self.candidate_features();
        let Some(best) = self.best_split(&rows, &features, min_leaf) else {
            return leaf;
        };
        let column = self.samples.columns[best.feature];
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| column[r] < best.threshold);
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }

    fn best_split(&self, rows: &[usize], features: &[usize], min_leaf: usize) -> Option<Best> {
        let n = rows.len();
        let total = self.counts(rows);
        let mut best: Option<Best> = None;
        let mut order = rows.to_vec();
        for &f in features {
            let column = self.samples.columns[f];
            order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
            let mut left = vec![0usize; self.samples.n_classes];
            for i in 0..n - 1 {
                left[self.samples.labels[order[i]]] += 1;
                let (lo, hi) = (column[order[i]], column[order[i + 1]]);
                if lo == hi {
                    continue;
                }
                let n_left = i + 1;
                if n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let score = gini_sum(&left, n_left) + gini_sum(&right, n - n_left);
                let threshold = lo + (hi - lo) / 2.0;
                // features ascend and thresholds ascend within a feature, so
                // keeping the first minimum applies the tie rule
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(Best {
                        score,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(columns: Vec<&[f64]>, labels: &[usize], params: TreeParams) -> DecisionTree {
        let samples = Samples {
            columns,
            labels,
            n_classes: labels.iter().max().unwrap() + 1,
        };
        let rows: Vec<usize> = (0..labels.len()).collect();
        DecisionTree::fit(&samples, &rows, &params, None)
    }

    #[test]
    fn one_split_separates_signs() {
        let x = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        let y = [0, 0, 0, 1, 1, 1];
        let tree = fit(
            vec![&x],
            &y,
            TreeParams {
                max_depth: 1,
                min_samples_leaf: 1,
            },
        );
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.predict_row(&[-0.5]), 0);
        assert_eq!(tree.predict_row(&[0.0]), 1);
        assert_eq!(tree.predict_row(&[10.0]), 1);
    }

    #[test]
    fn ties_go_to_lowest_feature() {
        let a = [0.0, 1.0, 2.0, 3.0];
        let y = [0, 0, 1, 1];
        let tree = fit(vec![&a, &a], &y, TreeParams::default());
        match tree.root {
            Node::Split {
                feature, threshold, ..
            } => assert_eq!((feature, threshold), (0, 1.5)),
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn min_leaf_blocks_split() {
        let x = [0.0, 1.0, 2.0];
        let y = [0, 1, 1];
        let tree = fit(
            vec![&x],
            &y,
            TreeParams {
                max_depth: 3,
                min_samples_leaf: 2,
            },
        );
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.predict_row(&[0.0]), 1);
    }

    #[test]
    fn majority_tie_breaks_low() {
        assert_eq!(majority(&[2, 2, 1]), 0);
        assert_eq!(majority(&[1, 3, 3]), 1);
    }
}
