//! Generated multi-label datasets with controllable imbalance, label
//! concurrence and class overlap.
//!
//! Each label's positives gather around a few sub-concept centers; rows with
//! no positive label fill the unit cube uniformly. Rarer labels get fewer
//! points per sub-concept, so they are also locally harder.

use ndarray::Array2;
use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureColumn, MultiLabelDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub centers_per_label: usize,
    /// Positive rate of the most frequent label.
    pub base_rate: f64,
    /// Label `j` has rate `base_rate * exp(-decay * j)`.
    pub decay: f64,
    /// Share of a rare label's positives that also carry the most frequent label.
    pub co_occurrence: f64,
    /// Standard deviation of points around their sub-concept center.
    pub spread: f64,
    pub min_positives: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 400,
            d: 4,
            q: 5,
            centers_per_label: 3,
            base_rate: 0.4,
            decay: 0.5,
            co_occurrence: 0.3,
            spread: 0.05,
            min_positives: 6,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// Member `t` of a `count`-member family; imbalance, concurrence and overlap
    /// all grow with `t`.
    pub fn family_member(t: usize, count: usize, n: usize, seed: u64) -> Self {
        let s = if count > 1 { t as f64 / (count - 1) as f64 } else { 0.0 };
        SyntheticSpec {
            n,
            decay: 0.25 + 0.6 * s,
            co_occurrence: 0.1 + 0.7 * s,
            spread: 0.03 + 0.12 * s,
            seed,
            ..SyntheticSpec::default()
        }
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<MultiLabelDataset> {
    let SyntheticSpec { n, d, q, .. } = *spec;
    if n < 4 || d == 0 || q == 0 || spec.centers_per_label == 0 {
        return Err(Error::InvalidArgument(
            "synthetic data needs n >= 4, d >= 1, q >= 1 and centers".into(),
        ));
    }
    if spec.spread.is_nan()
        || spec.spread <= 0.0
        || !(0.0..=1.0).contains(&spec.co_occurrence)
        || spec.base_rate.is_nan()
        || spec.base_rate <= 0.0
    {
        return Err(Error::InvalidArgument(
            "invalid synthetic spread, co-occurrence or base rate".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let counts: Vec<usize> = (0..q)
        .map(|j| {
            let c = (n as f64 * spec.base_rate * (-spec.decay * j as f64).exp()).round() as usize;
            c.clamp(spec.min_positives.min(n / 2), n / 2)
        })
        .collect();

    let mut labels = Array2::<u8>::zeros((n, q));
    for j in 1..q {
        for i in sample_indices(&mut rng, n, counts[j]) {
            labels[[i, j]] = 1;
        }
    }
    // the most frequent label prefers rows holding a rare label
    let mut rare_rows: Vec<usize> = (0..n).filter(|&i| (1..q).any(|j| labels[[i, j]] == 1)).collect();
    let mut other_rows: Vec<usize> = (0..n).filter(|&i| (1..q).all(|j| labels[[i, j]] == 0)).collect();
    rare_rows.shuffle(&mut rng);
    other_rows.shuffle(&mut rng);
    let shared = ((rare_rows.len() as f64 * spec.co_occurrence).round() as usize).min(counts[0]);
    let rest = (counts[0] - shared).min(other_rows.len());
    for &i in rare_rows.iter().take(shared).chain(other_rows.iter().take(rest)) {
        labels[[i, 0]] = 1;
    }

    let centers: Vec<Vec<Vec<f64>>> = (0..q)
        .map(|_| {
            (0..spec.centers_per_label)
                .map(|_| (0..d).map(|_| rng.gen_range(0.15..0.85)).collect())
                .collect()
        })
        .collect();
    let noise = Normal::new(0.0, spec.spread).expect("positive spread");
    let mut features = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        // anchor at the rarest positive label
        let anchor = (0..q).rev().find(|&j| labels[[i, j]] == 1);
        match anchor {
            Some(j) => {
                let c = &centers[j][rng.gen_range(0..spec.centers_per_label)];
                for f in 0..d {
                    features[[i, f]] = c[f] + noise.sample(&mut rng);
                }
            }
            None => {
                for f in 0..d {
                    features[[i, f]] = rng.gen::<f64>();
                }
            }
        }
    }
    MultiLabelDataset::new(
        format!("synthetic-{}", spec.seed),
        (0..d).map(|f| FeatureColumn::numeric(format!("f{f}"))).collect(),
        features,
        (0..q).map(|j| format!("label{j}")).collect(),
        labels,
    )
}

/// `count` datasets of growing difficulty, named `family-<t>`.
pub fn family(count: usize, n: usize, seed: u64) -> Result<Vec<(String, MultiLabelDataset)>> {
    (0..count)
        .map(|t| {
            let spec = SyntheticSpec::family_member(t, count, n, seed.wrapping_add(t as u64));
            Ok((format!("family-{t}"), generate(&spec)?))
        })
        .collect()
}
