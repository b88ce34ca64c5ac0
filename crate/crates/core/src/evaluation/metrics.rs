use std::cmp::Ordering;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::learners::TrainedModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub label: String,
    pub f1: f64,
    /// `None` when the test column holds a single class.
    pub auc_roc: Option<f64>,
    pub aucpr: Option<f64>,
    pub threshold: f64,
    pub positives: usize,
    pub evaluable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_label: Vec<LabelReport>,
    pub macro_f1: f64,
    pub macro_auc_roc: f64,
    pub macro_aucpr: f64,
    /// Labels left out of the macro averages (single-class test column).
    pub unevaluable: Vec<String>,
    /// Labels dropped before training because the training split lacked a minority class.
    pub excluded: Vec<String>,
    pub repeat: Option<usize>,
    pub fold: Option<usize>,
    pub learner: Option<String>,
    pub sampler: Option<String>,
    pub seed: Option<u64>,
    pub train_size: Option<usize>,
    pub test_size: Option<usize>,
}

fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// F1 of the positive class for `score > threshold`; 0 when precision + recall = 0.
pub fn f1_score(truth: &[u8], scores: &[f64], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&y, &s) in truth.iter().zip(scores) {
        match (y == 1, s > threshold) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    f1_from_counts(tp, fp, fn_)
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Area under the ROC curve by the rank statistic, ties counted half.
/// `None` for single-class columns.
pub fn auc_roc(truth: &[u8], scores: &[f64]) -> Option<f64> {
    let n = truth.len();
    let pos = truth.iter().filter(|&&y| y == 1).count();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_f64(scores[a], scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&m| truth[m] == 1).count() as f64;
        i = j + 1;
    }
    let p = pos as f64;
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Area under the precision-recall curve with step interpolation: the sum over
/// distinct score levels (descending) of recall gain times precision there.
pub fn aucpr(truth: &[u8], scores: &[f64]) -> Option<f64> {
    let n = truth.len();
    let pos = truth.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == n {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_f64(scores[b], scores[a]));
    let (mut tp, mut seen, mut area) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let gained = order[i..=j].iter().filter(|&&m| truth[m] == 1).count();
        tp += gained;
        seen += j - i + 1;
        area += (gained as f64 / pos as f64) * (tp as f64 / seen as f64);
        i = j + 1;
    }
    Some(area)
}

pub fn macro_metrics(
    truth: &Array2<u8>,
    scores: &Array2<f64>,
    thresholds: &[f64],
    label_names: &[String],
) -> Result<EvaluationReport> {
    if truth.dim() != scores.dim() || thresholds.len() != truth.ncols() || label_names.len() != truth.ncols() {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch: truth {:?}, scores {:?}, {} thresholds, {} labels",
            truth.dim(),
            scores.dim(),
            thresholds.len(),
            label_names.len()
        )));
    }
    let mut per_label = Vec::with_capacity(truth.ncols());
    for j in 0..truth.ncols() {
        let y = truth.column(j).to_vec();
        let s = scores.column(j).to_vec();
        let auc = auc_roc(&y, &s);
        per_label.push(LabelReport {
            label: label_names[j].clone(),
            f1: f1_score(&y, &s, thresholds[j]),
            auc_roc: auc,
            aucpr: aucpr(&y, &s),
            threshold: thresholds[j],
            positives: y.iter().filter(|&&v| v == 1).count(),
            evaluable: auc.is_some(),
        });
    }
    let ok: Vec<&LabelReport> = per_label.iter().filter(|l| l.evaluable).collect();
    if ok.is_empty() {
        return Err(Error::Undefined(
            "every label has a single class in the evaluation data".into(),
        ));
    }
    let m = ok.len() as f64;
    Ok(EvaluationReport {
        macro_f1: ok.iter().map(|l| l.f1).sum::<f64>() / m,
        macro_auc_roc: ok.iter().map(|l| l.auc_roc.unwrap()).sum::<f64>() / m,
        macro_aucpr: ok.iter().map(|l| l.aucpr.unwrap()).sum::<f64>() / m,
        unevaluable: per_label
            .iter()
            .filter(|l| !l.evaluable)
            .map(|l| l.label.clone())
            .collect(),
        per_label,
        excluded: Vec::new(),
        repeat: None,
        fold: None,
        learner: None,
        sampler: None,
        seed: None,
        train_size: None,
        test_size: None,
    })
}

/// Threshold maximizing F1 over `{0, 1}` and the midpoints between
/// consecutive distinct scores; ties go to the smallest threshold.
pub fn tune_threshold(truth: &[u8], scores: &[f64]) -> f64 {
    let mut sorted: Vec<(f64, u8)> = scores.iter().copied().zip(truth.iter().copied()).collect();
    sorted.sort_by(|a, b| cmp_f64(a.0, b.0));
    let total_pos = truth.iter().filter(|&&y| y == 1).count();
    // positives among the first `i` sorted entries
    let mut pos_prefix = vec![0usize; sorted.len() + 1];
    for (i, &(_, y)) in sorted.iter().enumerate() {
        pos_prefix[i + 1] = pos_prefix[i] + usize::from(y == 1);
    }
    let mut candidates = vec![0.0, 1.0];
    for w in sorted.windows(2) {
        if w[1].0 > w[0].0 {
            candidates.push(w[0].0 + (w[1].0 - w[0].0) / 2.0);
        }
    }
    candidates.sort_by(|a, b| cmp_f64(*a, *b));
    candidates.dedup();

    let mut best = (f64::NEG_INFINITY, 0.0);
    for &t in &candidates {
        let below = sorted.partition_point(|&(s, _)| s <= t);
        let tp = total_pos - pos_prefix[below];
        let fp = (sorted.len() - below) - tp;
        let fn_ = total_pos - tp;
        let f = f1_from_counts(tp, fp, fn_);
        if f > best.0 {
            best = (f, t);
        }
    }
    best.1
}

pub fn tune_thresholds_from_scores(truth: &Array2<u8>, scores: &Array2<f64>) -> Vec<f64> {
    (0..truth.ncols())
        .map(|j| tune_threshold(&truth.column(j).to_vec(), &scores.column(j).to_vec()))
        .collect()
}

/// Per-label thresholds maximizing F1 of `model` on `train`.
pub fn tune_thresholds(model: &TrainedModel, train: &MultiLabelDataset) -> Result<Vec<f64>> {
    let scores = model.score_dataset(train)?;
    Ok(tune_thresholds_from_scores(train.labels(), &scores))
}

/// Mean over all unordered pairs of the fraction of differing cells.
pub fn disagreement(predictions: &[Array2<u8>]) -> Result<f64> {
    if predictions.len() < 2 {
        return Err(Error::InvalidArgument(
            "disagreement needs at least two prediction matrices".into(),
        ));
    }
    let dim = predictions[0].dim();
    if let Some(p) = predictions.iter().find(|p| p.dim() != dim) {
        return Err(Error::InvalidArgument(format!(
            "prediction shapes differ: {:?} vs {:?}",
            dim,
            p.dim()
        )));
    }
    let cells = (dim.0 * dim.1) as f64;
    if cells == 0.0 {
        return Err(Error::InvalidArgument("empty prediction matrices".into()));
    }
    let m = predictions.len();
    let mut total = 0.0;
    for a in 0..m {
        for b in a + 1..m {
            let diff = predictions[a]
                .iter()
                .zip(predictions[b].iter())
                .filter(|(x, y)| x != y)
                .count();
            total += diff as f64 / cells;
        }
    }
    Ok(total / (m * (m - 1) / 2) as f64)
}
