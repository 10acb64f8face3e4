use serde::{Deserialize, Serialize};

use super::tree::{majority, Samples};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

/// k nearest neighbours under Euclidean distance on features z-scored with
/// the training mean and standard deviation. Equal distances prefer the
/// earlier training row; the vote prefers the lowest class.
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    k: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Row-major standardized training rows.
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Knn {
    pub(crate) fn fit(samples: &Samples, params: &KnnParams) -> Self {
        let n = samples.labels.len();
        let mut mean = Vec::with_capacity(samples.columns.len());
        let mut scale = Vec::with_capacity(samples.columns.len());
        for c in &samples.columns {
            let m = c.iter().sum::<f64>() / n as f64;
            let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
            mean.push(m);
            scale.push(if sd > 1e-12 { sd } else { 1.0 });
        }
        let rows = (0..n)
            .map(|r| {
                samples
                    .columns
                    .iter()
                    .enumerate()
                    .map(|(f, c)| (c[r] - mean[f]) / scale[f])
                    .collect()
            })
            .collect();
        Knn {
            k: params.k.clamp(1, n.max(1)),
            mean,
            scale,
            rows,
            labels: samples.labels.to_vec(),
            n_classes: samples.n_classes,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        let z: Vec<f64> = row
            .iter()
            .enumerate()
            .map(|(f, v)| (v - self.mean[f]) / self.scale[f])
            .collect();
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, t)| (t.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let mut votes = vec![0; self.n_classes];
        for &(_, i) in &dist[..k] {
            votes[self.labels[i]] += 1;
        }
        majority(&votes)
    }
}
