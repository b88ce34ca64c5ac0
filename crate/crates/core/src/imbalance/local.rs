use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{label_class_info, MultiLabelDataset};
use crate::error::{Error, Result};
use crate::neighbors::{build_index, NeighborIndex};

/// Sentinel stored in `S` for cells that are not informative.
pub const NOT_INFORMATIVE: f64 = -1.0;

/// Kind of a minority-class cell by neighborhood hostility; `Majority` marks
/// majority-class cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InstanceType {
    #[serde(rename = "SF")]
    Safe,
    #[serde(rename = "BD")]
    Borderline,
    #[serde(rename = "RR")]
    Rare,
    #[serde(rename = "OT")]
    Outlier,
    #[serde(rename = "MJ")]
    Majority,
}

impl InstanceType {
    /// Type of a minority cell with `opposite` of `k` neighbors in the other class.
    /// Integer comparisons keep the 0.3 / 0.7 cut points exact.
    pub fn from_counts(opposite: usize, k: usize) -> Self {
        if 10 * opposite < 3 * k {
            InstanceType::Safe
        } else if 10 * opposite < 7 * k {
            InstanceType::Borderline
        } else if opposite < k {
            InstanceType::Rare
        } else {
            InstanceType::Outlier
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            InstanceType::Safe => "SF",
            InstanceType::Borderline => "BD",
            InstanceType::Rare => "RR",
            InstanceType::Outlier => "OT",
            InstanceType::Majority => "MJ",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalStats {
    pub k: usize,
    /// Number of neighbors holding the opposite value, per cell.
    pub opposite: Array2<u32>,
    /// `opposite / k`.
    pub c: Array2<f64>,
    /// Normalized informative scores, [`NOT_INFORMATIVE`] elsewhere.
    pub s: Array2<f64>,
    pub w: Vec<f64>,
    pub types: Array2<InstanceType>,
    /// Minority class per label.
    pub minority: Vec<u8>,
    /// `None` when some label has no minority-class instance.
    pub limb: Option<f64>,
}

impl LocalStats {
    pub fn is_informative(&self, i: usize, j: usize) -> bool {
        self.s[[i, j]] != NOT_INFORMATIVE
    }
}

pub fn local_stats(ds: &MultiLabelDataset, idx: &NeighborIndex) -> Result<LocalStats> {
    let n = ds.n();
    let q = ds.q();
    if idx.n() != n {
        return Err(Error::InvalidArgument(format!(
            "neighbor index covers {} instances, dataset has {n}",
            idx.n()
        )));
    }
    let k = idx.k();
    let labels = ds.labels();
    let info = label_class_info(ds);
    let minority: Vec<u8> = info.labels.iter().map(|c| c.minority).collect();

    let mut opposite = Array2::<u32>::zeros((n, q));
    for i in 0..n {
        for &m in idx.knn(i) {
            for j in 0..q {
                if labels[[m, j]] != labels[[i, j]] {
                    opposite[[i, j]] += 1;
                }
            }
        }
    }
    let c = opposite.mapv(|o| o as f64 / k as f64);

    let mut s = Array2::from_elem((n, q), NOT_INFORMATIVE);
    for j in 0..q {
        let informative = |i: usize| labels[[i, j]] == minority[j] && (opposite[[i, j]] as usize) < k;
        let total: f64 = (0..n).filter(|&i| informative(i)).map(|i| c[[i, j]]).sum();
        for i in (0..n).filter(|&i| informative(i)) {
            // All informative cells safe (C = 0): the label contributes no weight.
            s[[i, j]] = if total > 0.0 { c[[i, j]] / total } else { 0.0 };
        }
    }
    let w: Vec<f64> = s
        .rows()
        .into_iter()
        .map(|row| row.iter().filter(|&&v| v != NOT_INFORMATIVE).sum())
        .collect();

    let types = instance_types(ds, idx, &opposite, &minority);
    let limb = limb_from(&c, labels, &minority);

    Ok(LocalStats {
        k,
        opposite,
        c,
        s,
        w,
        types,
        minority,
        limb,
    })
}

fn instance_types(
    ds: &MultiLabelDataset,
    idx: &NeighborIndex,
    opposite: &Array2<u32>,
    minority: &[u8],
) -> Array2<InstanceType> {
    let (n, q) = opposite.dim();
    let labels = ds.labels();
    let k = idx.k();
    let mut types = Array2::from_shape_fn((n, q), |(i, j)| {
        if labels[[i, j]] != minority[j] {
            InstanceType::Majority
        } else {
            InstanceType::from_counts(opposite[[i, j]] as usize, k)
        }
    });
    // RR cells with a safe or borderline minority neighbor become BD; repeat
    // over snapshots until nothing changes. Promotion is monotone.
    loop {
        let snapshot = types.clone();
        let mut changed = false;
        for i in 0..n {
            for j in 0..q {
                if snapshot[[i, j]] != InstanceType::Rare {
                    continue;
                }
                let promote = idx.knn(i).iter().any(|&m| {
                    labels[[m, j]] == minority[j]
                        && matches!(snapshot[[m, j]], InstanceType::Safe | InstanceType::Borderline)
                });
                if promote {
                    types[[i, j]] = InstanceType::Borderline;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    types
}

fn limb_from(c: &Array2<f64>, labels: &Array2<u8>, minority: &[u8]) -> Option<f64> {
    let (n, q) = c.dim();
    let mut total = 0.0;
    for j in 0..q {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            if labels[[i, j]] == minority[j] {
                sum += c[[i, j]];
                count += 1;
            }
        }
        if count == 0 {
            return None;
        }
        total += sum / count as f64;
    }
    Some(total / q as f64)
}

/// Mean over labels of the average `C` across minority-class cells.
pub fn limb(ds: &MultiLabelDataset, idx: &NeighborIndex) -> Result<f64> {
    let info = label_class_info(ds);
    if let Some(j) = info.labels.iter().position(|c| c.minority_count() == 0) {
        return Err(Error::label(
            &ds.label_names()[j],
            "no minority-class instances, local imbalance is undefined",
        ));
    }
    let stats = local_stats(ds, idx)?;
    stats.limb.ok_or_else(|| Error::Undefined("LImb".into()))
}

/// LImb for each `k`, each from a freshly built index.
pub fn limb_sensitivity(ds: &MultiLabelDataset, k_values: &[usize]) -> Result<Vec<(usize, f64)>> {
    k_values
        .iter()
        .map(|&k| {
            let idx = build_index(ds, k)?;
            Ok((k, limb(ds, &idx)?))
        })
        .collect()
}

/// Influence of each instance on its reverse neighbors: informative scores of
/// reverse neighbors count positively where the label values agree and
/// negatively where they differ, averaged over the reverse-neighbor set.
pub fn influence(ds: &MultiLabelDataset, idx: &NeighborIndex, stats: &LocalStats) -> Vec<f64> {
    let labels = ds.labels();
    (0..ds.n())
        .map(|i| {
            let rev = idx.rknn(i);
            if rev.is_empty() {
                return 0.0;
            }
            let mut total = 0.0;
            for j in 0..ds.q() {
                for &m in rev {
                    let s = stats.s[[m, j]];
                    if s == NOT_INFORMATIVE {
                        continue;
                    }
                    if labels[[i, j]] == labels[[m, j]] {
                        total += s;
                    } else {
                        total -= s;
                    }
                }
            }
            total / rev.len() as f64
        })
        .collect()
}

/// `w + u` shifted so its minimum is zero.
pub fn importance(w: &[f64], u: &[f64]) -> Vec<f64> {
    let sums: Vec<f64> = w.iter().zip(u).map(|(a, b)| a + b).collect();
    let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
    sums.iter().map(|v| v - lo).collect()
}
