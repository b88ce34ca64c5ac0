//! Multi-label k-nearest-neighbor scorer with add-`s` smoothed count tables.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::MultiLabelDataset;
use crate::error::Result;
use crate::neighbors::{build_index, nearest, DistanceMetric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlknnModel {
    pub k: usize,
    pub smoothing: f64,
    pub metric: DistanceMetric,
    /// Normalized training features.
    pub train: Array2<f64>,
    /// Smoothed prior of the positive class, per label.
    pub prior: Vec<f64>,
    /// `pos_counts[j][c]`: positives of label j with exactly c positive neighbors.
    pub pos_counts: Vec<Vec<u64>>,
    pub neg_counts: Vec<Vec<u64>>,
    pub train_labels: Array2<u8>,
}

impl MlknnModel {
    pub fn fit(ds: &MultiLabelDataset, k: usize, smoothing: f64) -> Result<Self> {
        let idx = build_index(ds, k)?;
        let (n, q) = (ds.n(), ds.q());
        let labels = ds.labels();
        let mut prior = Vec::with_capacity(q);
        let mut pos_counts = vec![vec![0u64; k + 1]; q];
        let mut neg_counts = vec![vec![0u64; k + 1]; q];
        for j in 0..q {
            let pos = labels.column(j).iter().filter(|&&v| v == 1).count();
            prior.push((smoothing + pos as f64) / (2.0 * smoothing + n as f64));
        }
        for i in 0..n {
            for j in 0..q {
                let c = idx.knn(i).iter().filter(|&&m| labels[[m, j]] == 1).count();
                if labels[[i, j]] == 1 {
                    pos_counts[j][c] += 1;
                } else {
                    neg_counts[j][c] += 1;
                }
            }
        }
        let metric = DistanceMetric::fit(ds);
        Ok(MlknnModel {
            k,
            smoothing,
            train: metric.normalize(ds.features()),
            metric,
            prior,
            pos_counts,
            neg_counts,
            train_labels: labels.clone(),
        })
    }

    fn likelihood(&self, table: &[u64], c: usize) -> f64 {
        let total: u64 = table.iter().sum();
        (self.smoothing + table[c] as f64) / (self.smoothing * (self.k + 1) as f64 + total as f64)
    }

    /// Posterior of each label given the counts of positive neighbors.
    pub fn posterior(&self, counts: &[usize]) -> Vec<f64> {
        counts
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let a = self.prior[j] * self.likelihood(&self.pos_counts[j], c);
                let b = (1.0 - self.prior[j]) * self.likelihood(&self.neg_counts[j], c);
                if a + b > 0.0 {
                    a / (a + b)
                } else {
                    self.prior[j]
                }
            })
            .collect()
    }

    pub fn score_row(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        let query = self.metric.normalize_row(row);
        let nb = nearest(&self.metric, &self.train, &query, self.k, None);
        let counts: Vec<usize> = (0..self.train_labels.ncols())
            .map(|j| nb.iter().filter(|&&m| self.train_labels[[m, j]] == 1).count())
            .collect();
        self.posterior(&counts)
    }
}
