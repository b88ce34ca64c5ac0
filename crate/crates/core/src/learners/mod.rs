//! Two multi-label learners used to evaluate samplers: binary relevance over
//! logistic regression, and MLkNN.

pub mod linear;
pub mod mlknn;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureColumn, MultiLabelDataset};
use crate::error::{Error, Result};
use linear::{sigmoid, Encoder};
pub use mlknn::MlknnModel;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    BrLinear,
    Mlknn,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 2] = [LearnerKind::BrLinear, LearnerKind::Mlknn];

    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::BrLinear => "br_linear",
            LearnerKind::Mlknn => "mlknn",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown learner `{s}` (expected br_linear or mlknn)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerParams {
    /// L2 penalty of br_linear (on the mean log-loss).
    pub l2: f64,
    /// Gradient max-norm at which br_linear stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Neighborhood size of mlknn.
    pub k: usize,
    /// Add-`s` smoothing of mlknn's count tables.
    pub smoothing: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            l2: 1e-3,
            tol: 1e-6,
            max_iter: 100,
            k: 10,
            smoothing: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LabelScorer {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    /// Single-class training column: the smoothed class rate.
    Constant {
        rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    BrLinear { encoder: Encoder, labels: Vec<LabelScorer> },
    Mlknn(Box<MlknnModel>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: LearnerKind,
    pub columns: Vec<FeatureColumn>,
    pub label_names: Vec<String>,
    pub params: ModelParams,
    /// Bipartition thresholds; a label is predicted when its score is strictly larger.
    pub thresholds: Vec<f64>,
}

pub fn train(ds: &MultiLabelDataset, kind: LearnerKind, hp: &LearnerParams) -> Result<TrainedModel> {
    let params = match kind {
        LearnerKind::BrLinear => train_br_linear(ds, hp)?,
        LearnerKind::Mlknn => {
            if hp.k == 0 || hp.k >= ds.n() {
                return Err(Error::InvalidArgument(format!(
                    "mlknn needs 1 <= k <= n - 1, got k = {} with n = {}",
                    hp.k,
                    ds.n()
                )));
            }
            ModelParams::Mlknn(Box::new(MlknnModel::fit(ds, hp.k, hp.smoothing)?))
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        columns: ds.columns().to_vec(),
        label_names: ds.label_names().to_vec(),
        params,
        thresholds: vec![0.5; ds.q()],
    })
}

fn train_br_linear(ds: &MultiLabelDataset, hp: &LearnerParams) -> Result<ModelParams> {
    if hp.l2.is_nan() || hp.l2 <= 0.0 || hp.tol.is_nan() || hp.tol <= 0.0 {
        return Err(Error::InvalidArgument("br_linear needs positive l2 and tol".into()));
    }
    let encoder = Encoder::fit(ds.columns(), ds.features());
    let x = encoder.encode(ds.features());
    let n = ds.n() as f64;
    let labels: Vec<LabelScorer> = (0..ds.q())
        .into_par_iter()
        .map(|j| {
            let y: Vec<u8> = ds.labels().column(j).to_vec();
            let pos = y.iter().filter(|&&v| v == 1).count();
            if pos == 0 || pos == y.len() {
                return LabelScorer::Constant {
                    rate: (pos as f64 + 1.0) / (n + 2.0),
                };
            }
            let fit = linear::fit(&x, &y, hp.l2, hp.tol, hp.max_iter);
            if fit.grad_norm >= hp.tol {
                log::warn!(
                    "label `{}`: br_linear stopped at gradient norm {:.3e} after {} iterations",
                    ds.label_names()[j],
                    fit.grad_norm,
                    fit.iterations
                );
            }
            let (w, b) = fit.params.split_at(x.ncols());
            LabelScorer::Linear {
                weights: w.to_vec(),
                bias: b[0],
            }
        })
        .collect();
    Ok(ModelParams::BrLinear { encoder, labels })
}

impl TrainedModel {
    pub fn q(&self) -> usize {
        self.label_names.len()
    }

    fn check_schema(&self, ds: &MultiLabelDataset) -> Result<()> {
        if ds.columns() != self.columns.as_slice() {
            return Err(Error::SchemaMismatch(
                "feature columns differ from the training schema".into(),
            ));
        }
        if ds.label_names() != self.label_names.as_slice() {
            return Err(Error::SchemaMismatch(
                "label names differ from the training schema".into(),
            ));
        }
        Ok(())
    }

    /// Relevance scores in `[0, 1]` for one raw feature row.
    pub fn score(&self, row: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        if row.len() != self.columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "instance has {} features, model expects {}",
                row.len(),
                self.columns.len()
            )));
        }
        Ok(match &self.params {
            ModelParams::BrLinear { encoder, labels } => {
                let x = encoder.encode_row(row);
                labels
                    .iter()
                    .map(|s| match s {
                        LabelScorer::Linear { weights, bias } => {
                            sigmoid(weights.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + bias)
                        }
                        LabelScorer::Constant { rate } => *rate,
                    })
                    .collect()
            }
            ModelParams::Mlknn(m) => m.score_row(row),
        })
    }

    pub fn score_dataset(&self, ds: &MultiLabelDataset) -> Result<Array2<f64>> {
        self.check_schema(ds)?;
        let rows: Vec<Vec<f64>> = (0..ds.n())
            .into_par_iter()
            .map(|i| self.score(ds.row(i)))
            .collect::<Result<_>>()?;
        Ok(Array2::from_shape_fn((ds.n(), self.q()), |(i, j)| rows[i][j]))
    }

    pub fn predict(&self, row: ArrayView1<'_, f64>) -> Result<Vec<u8>> {
        Ok(apply_thresholds(&self.score(row)?, &self.thresholds))
    }

    pub fn predict_dataset(&self, ds: &MultiLabelDataset) -> Result<Array2<u8>> {
        Ok(threshold_matrix(&self.score_dataset(ds)?, &self.thresholds))
    }

    pub fn set_thresholds(&mut self, thresholds: Vec<f64>) -> Result<()> {
        if thresholds.len() != self.q() || thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidArgument(format!(
                "expected {} thresholds in [0, 1]",
                self.q()
            )));
        }
        self.thresholds = thresholds;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        if m.thresholds.len() != m.q() {
            return Err(Error::InvalidArgument(
                "model thresholds do not match its labels".into(),
            ));
        }
        Ok(m)
    }
}

/// Bit `j` is set when `scores[j] > thresholds[j]`.
pub fn apply_thresholds(scores: &[f64], thresholds: &[f64]) -> Vec<u8> {
    scores.iter().zip(thresholds).map(|(s, t)| u8::from(s > t)).collect()
}

pub fn threshold_matrix(scores: &Array2<f64>, thresholds: &[f64]) -> Array2<u8> {
    Array2::from_shape_fn(scores.dim(), |(i, j)| u8::from(scores[[i, j]] > thresholds[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureColumn;
    use ndarray::array;

    fn ds(x: Array2<f64>, y: Array2<u8>) -> MultiLabelDataset {
        let cols = (0..x.ncols())
            .map(|j| FeatureColumn::numeric(format!("x{j}")))
            .collect();
        let names = (0..y.ncols()).map(|j| format!("l{j}")).collect();
        MultiLabelDataset::new("t", cols, x, names, y).unwrap()
    }

    #[test]
    fn separable_pair_ranks_correctly() {
        let d = ds(array![[0.0], [1.0]], array![[0], [1]]);
        let m = train(&d, LearnerKind::BrLinear, &LearnerParams::default()).unwrap();
        let s = m.score_dataset(&d).unwrap();
        assert!(s[[1, 0]] > s[[0, 0]]);
    }

    #[test]
    fn constant_label_scores_smoothed_prior() {
        let d = ds(array![[0.0], [1.0], [2.0]], array![[1], [1], [1]]);
        let m = train(&d, LearnerKind::BrLinear, &LearnerParams::default()).unwrap();
        let s = m.score(d.row(0)).unwrap();
        assert_eq!(s, vec![0.8]);
        let hp = LearnerParams {
            k: 1,
            ..Default::default()
        };
        let m = train(&d, LearnerKind::Mlknn, &hp).unwrap();
        assert!(m.score(d.row(0)).unwrap()[0] > 0.5);
    }

    #[test]
    fn xor_is_not_linearly_learnable() {
        let d = ds(
            array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]],
            array![[0], [1], [1], [0]],
        );
        let m = train(&d, LearnerKind::BrLinear, &LearnerParams::default()).unwrap();
        let pred = m.predict_dataset(&d).unwrap();
        let correct = (0..4).filter(|&i| pred[[i, 0]] == d.labels()[[i, 0]]).count();
        assert!(correct <= 3);
    }

    #[test]
    fn zero_weights_score_half() {
        let d = ds(array![[0.0], [1.0]], array![[0], [1]]);
        let mut m = train(&d, LearnerKind::BrLinear, &LearnerParams::default()).unwrap();
        m.params = ModelParams::BrLinear {
            encoder: Encoder::fit(d.columns(), d.features()),
            labels: vec![LabelScorer::Linear {
                weights: vec![0.0],
                bias: 0.0,
            }],
        };
        assert_eq!(m.score(d.row(1)).unwrap(), vec![0.5]);
    }

    #[test]
    fn strict_threshold() {
        assert_eq!(apply_thresholds(&[0.5, 0.4, 0.6], &[0.5, 0.5, 0.5]), vec![0, 0, 1]);
        assert_eq!(apply_thresholds(&[1e-9, 0.0], &[0.0, 0.0]), vec![1, 0]);
    }

    #[test]
    fn json_round_trip_and_schema_check() {
        let d = ds(
            array![[0.0, 1.0], [1.0, 0.5], [0.3, 0.2]],
            array![[0, 1], [1, 0], [1, 1]],
        );
        for kind in LearnerKind::ALL {
            let hp = LearnerParams {
                k: 2,
                ..Default::default()
            };
            let m = train(&d, kind, &hp).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back.score_dataset(&d).unwrap(), m.score_dataset(&d).unwrap());
        }
        let m = train(&d, LearnerKind::BrLinear, &LearnerParams::default()).unwrap();
        let other = ds(array![[0.0], [1.0]], array![[0, 1], [1, 0]]);
        assert!(matches!(m.score_dataset(&other), Err(Error::SchemaMismatch(_))));
        let bad = m
            .to_json()
            .unwrap()
            .replace("\"format_version\":1", "\"format_version\":99");
        assert!(TrainedModel::from_json(&bad).is_err());
    }
}
