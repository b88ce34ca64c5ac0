//! Exact k-nearest-neighbor and reverse-kNN structures.
//!
//! Distances are Euclidean over min-max normalized numeric columns plus a 0/1
//! overlap term per nominal column. Neighbor lists are ordered by ascending
//! distance, then ascending instance id.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureColumn, MultiLabelDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    EuclideanOverlap,
}

impl DistanceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistanceKind::EuclideanOverlap => "euclidean_overlap",
        }
    }
}

/// Per-column normalization fitted on one dataset and reused for any row
/// sharing its schema (including synthetic rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMetric {
    numeric: Vec<bool>,
    mins: Vec<f64>,
    ranges: Vec<f64>,
}

impl DistanceMetric {
    pub fn fit(ds: &MultiLabelDataset) -> Self {
        Self::fit_columns(ds.columns(), ds.features())
    }

    pub fn fit_columns(columns: &[FeatureColumn], features: &Array2<f64>) -> Self {
        let mut mins = Vec::with_capacity(columns.len());
        let mut ranges = Vec::with_capacity(columns.len());
        let numeric: Vec<bool> = columns.iter().map(FeatureColumn::is_numeric).collect();
        for (j, col) in features.columns().into_iter().enumerate() {
            if numeric[j] {
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                mins.push(lo);
                ranges.push(hi - lo);
            } else {
                mins.push(0.0);
                ranges.push(0.0);
            }
        }
        DistanceMetric { numeric, mins, ranges }
    }

    pub fn dims(&self) -> usize {
        self.numeric.len()
    }

    pub fn is_numeric(&self, j: usize) -> bool {
        self.numeric[j]
    }

    /// Numeric cells map to `(x - min) / range` (`x - min` for constant
    /// columns); nominal category indices pass through.
    pub fn normalize_value(&self, j: usize, x: f64) -> f64 {
        if !self.numeric[j] {
            return x;
        }
        let shifted = x - self.mins[j];
        if self.ranges[j] > 0.0 {
            shifted / self.ranges[j]
        } else {
            shifted
        }
    }

    pub fn normalize_row(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &x)| self.normalize_value(j, x))
            .collect()
    }

    pub fn normalize(&self, features: &Array2<f64>) -> Array2<f64> {
        Array2::from_shape_fn(features.dim(), |(i, j)| self.normalize_value(j, features[[i, j]]))
    }

    /// Squared distance between two already-normalized rows.
    #[inline]
    pub fn squared_normalized(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..a.len() {
            if self.numeric[j] {
                let t = a[j] - b[j];
                s += t * t;
            } else if a[j] != b[j] {
                s += 1.0;
            }
        }
        s
    }

    pub fn distance(&self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        let na = self.normalize_row(a);
        let nb = self.normalize_row(b);
        self.squared_normalized(&na, &nb).sqrt()
    }
}

/// Distance between two raw rows of `ds` under the dataset's own normalization.
pub fn distance(ds: &MultiLabelDataset, a: usize, b: usize) -> f64 {
    DistanceMetric::fit(ds).distance(ds.row(a), ds.row(b))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborIndex {
    k: usize,
    knn: Vec<Vec<usize>>,
    rknn: Vec<Vec<usize>>,
    distance_kind: DistanceKind,
}

#[inline]
fn by_distance_then_id(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

/// The `k` rows of `normalized` nearest to `query`, skipping `exclude`.
pub fn nearest(
    metric: &DistanceMetric,
    normalized: &Array2<f64>,
    query: &[f64],
    k: usize,
    exclude: Option<usize>,
) -> Vec<usize> {
    let mut cands: Vec<(f64, usize)> = normalized
        .rows()
        .into_iter()
        .enumerate()
        .filter(|(m, _)| Some(*m) != exclude)
        .map(|(m, row)| {
            let row = row.as_slice().expect("standard layout");
            // rank on the reported distance so ties seen by callers break by id
            (metric.squared_normalized(query, row).sqrt(), m)
        })
        .collect();
    let k = k.min(cands.len());
    if k == 0 {
        return Vec::new();
    }
    if k < cands.len() {
        cands.select_nth_unstable_by(k - 1, by_distance_then_id);
        cands.truncate(k);
    }
    cands.sort_unstable_by(by_distance_then_id);
    cands.into_iter().map(|(_, m)| m).collect()
}

impl NeighborIndex {
    pub fn build(ds: &MultiLabelDataset, k: usize) -> Result<Self> {
        build_index(ds, k)
    }

    /// Assembles an index from precomputed neighbor lists, deriving the reverse lists.
    pub fn from_knn(k: usize, knn: Vec<Vec<usize>>) -> Result<Self> {
        let n = knn.len();
        for (i, list) in knn.iter().enumerate() {
            if list.len() != k {
                return Err(Error::InvalidArgument(format!(
                    "neighbor list {i} has {} entries, expected {k}",
                    list.len()
                )));
            }
            if list.iter().any(|&m| m >= n || m == i) {
                return Err(Error::InvalidArgument(format!("neighbor list {i} holds an invalid id")));
            }
        }
        let mut rknn = vec![Vec::new(); n];
        for (i, list) in knn.iter().enumerate() {
            for &m in list {
                rknn[m].push(i);
            }
        }
        Ok(NeighborIndex {
            k,
            knn,
            rknn,
            distance_kind: DistanceKind::EuclideanOverlap,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.knn.len()
    }

    pub fn knn(&self, i: usize) -> &[usize] {
        &self.knn[i]
    }

    pub fn rknn(&self, i: usize) -> &[usize] {
        &self.rknn[i]
    }

    pub fn distance_kind(&self) -> DistanceKind {
        self.distance_kind
    }

    const MAGIC: &'static [u8; 8] = b"MLBNIDX1";

    /// Binary cache image: magic, key, k, n, then `n * k` little-endian u32 ids.
    pub fn to_bytes(&self, key: &str) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + key.len() + self.n() * self.k * 4);
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&(key.len() as u32).to_le_bytes());
        out.extend_from_slice(key.as_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        for list in &self.knn {
            for &m in list {
                out.extend_from_slice(&(m as u32).to_le_bytes());
            }
        }
        out
    }

    /// Decodes a cache image; `None` when the image does not match `key`/`k`
    /// or is malformed.
    pub fn from_bytes(bytes: &[u8], key: &str, k: usize) -> Option<Self> {
        let mut pos = 0usize;
        let mut take = |len: usize| -> Option<&[u8]> {
            let s = bytes.get(pos..pos + len)?;
            pos += len;
            Some(s)
        };
        if take(8)? != Self::MAGIC {
            return None;
        }
        let key_len = u32::from_le_bytes(take(4)?.try_into().ok()?) as usize;
        if take(key_len)? != key.as_bytes() {
            return None;
        }
        let stored_k = u32::from_le_bytes(take(4)?.try_into().ok()?) as usize;
        let n = u64::from_le_bytes(take(8)?.try_into().ok()?) as usize;
        if stored_k != k {
            return None;
        }
        let mut knn = Vec::with_capacity(n);
        for _ in 0..n {
            let mut list = Vec::with_capacity(k);
            for _ in 0..k {
                list.push(u32::from_le_bytes(take(4)?.try_into().ok()?) as usize);
            }
            knn.push(list);
        }
        if take(1).is_some() {
            return None;
        }
        NeighborIndex::from_knn(k, knn).ok()
    }
}

/// Exact all-pairs kNN, parallel over query instances.
pub fn build_index(ds: &MultiLabelDataset, k: usize) -> Result<NeighborIndex> {
    let n = ds.n();
    if ds.d() == 0 {
        return Err(Error::InvalidArgument(
            "cannot index a dataset with zero features".into(),
        ));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "neighbor count k must satisfy 1 <= k <= n-1 (k = {k}, n = {n})"
        )));
    }
    let metric = DistanceMetric::fit(ds);
    let normalized = metric.normalize(ds.features());
    let knn: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let q = normalized.row(i);
            nearest(&metric, &normalized, q.as_slice().expect("standard layout"), k, Some(i))
        })
        .collect();
    NeighborIndex::from_knn(k, knn)
}

fn cache_path(dir: &Path, key: &str, k: usize) -> PathBuf {
    dir.join(format!("{key}-k{k}-{}.idx", DistanceKind::EuclideanOverlap.as_str()))
}

/// Like [`build_index`], reading and writing a binary cache under `cache_dir`
/// keyed by (feature hash, k, distance kind). Cache failures fall back to a
/// fresh build.
pub fn build_index_cached(ds: &MultiLabelDataset, k: usize, cache_dir: Option<&Path>) -> Result<NeighborIndex> {
    let Some(dir) = cache_dir else {
        return build_index(ds, k);
    };
    let key = ds.feature_hash();
    let path = cache_path(dir, &key, k);
    if let Ok(bytes) = fs::read(&path) {
        if let Some(idx) = NeighborIndex::from_bytes(&bytes, &key, k) {
            if idx.n() == ds.n() {
                log::debug!("neighbor index cache hit: {}", path.display());
                return Ok(idx);
            }
        }
        log::warn!("ignoring stale neighbor cache {}", path.display());
    }
    let idx = build_index(ds, k)?;
    if let Err(e) = write_cache(dir, &path, &idx.to_bytes(&key)) {
        log::warn!("could not write neighbor cache {}: {e}", path.display());
    }
    Ok(idx)
}

fn write_cache(dir: &Path, path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
