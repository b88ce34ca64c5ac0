use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{macro_metrics, tune_thresholds, EvaluationReport};
use crate::dataset::{label_class_info, MultiLabelDataset};
use crate::error::{Error, Result};
use crate::learners::{train, LearnerKind, LearnerParams};
use crate::sampling::{sample, SamplerConfig};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvProtocol {
    pub folds: usize,
    pub repeats: usize,
}

impl Default for CvProtocol {
    fn default() -> Self {
        CvProtocol { folds: 2, repeats: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanReport {
    pub macro_f1: f64,
    pub macro_auc_roc: f64,
    pub macro_aucpr: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Ordered by `(repeat, fold)`.
    pub reports: Vec<EvaluationReport>,
    pub mean: MeanReport,
}

pub fn mean_report(reports: &[EvaluationReport]) -> MeanReport {
    let m = reports.len().max(1) as f64;
    MeanReport {
        macro_f1: reports.iter().map(|r| r.macro_f1).sum::<f64>() / m,
        macro_auc_roc: reports.iter().map(|r| r.macro_auc_roc).sum::<f64>() / m,
        macro_aucpr: reports.iter().map(|r| r.macro_aucpr).sum::<f64>() / m,
        runs: reports.len(),
    }
}

/// Content order of the rows: labels first, then feature bit patterns. Makes
/// the fold assignment depend on the rows themselves, not their positions.
fn canonical_order(ds: &MultiLabelDataset) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ds.n()).collect();
    let key = |i: usize| {
        let labels: Vec<u8> = ds.label_row(i).to_vec();
        let feats: Vec<u64> = ds.row(i).iter().map(|v| v.to_bits()).collect();
        (labels, feats)
    };
    order.sort_by_cached_key(|&i| key(i));
    order
}

/// Fold id per instance. Instances are visited rarest label first and each
/// goes to the fold that most lacks that label, then the emptiest fold.
pub fn stratified_folds(ds: &MultiLabelDataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    let n = ds.n();
    if folds < 2 || folds > n {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= folds <= n, got {folds} folds for n = {n}"
        )));
    }
    let q = ds.q();
    let labels = ds.labels();
    let mut order = canonical_order(ds);
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let f = folds as f64;
    let mut want_total = vec![n as f64 / f; folds];
    let mut want_label: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let pos = labels.column(j).iter().filter(|&&v| v == 1).count();
            vec![pos as f64 / f; folds]
        })
        .collect();
    let mut assigned = vec![usize::MAX; n];
    let mut remaining: Vec<usize> = (0..q)
        .map(|j| labels.column(j).iter().filter(|&&v| v == 1).count())
        .collect();
    let mut left = n;

    while left > 0 {
        let rarest = (0..q).filter(|&j| remaining[j] > 0).min_by_key(|&j| (remaining[j], j));
        let Some(j) = rarest else { break };
        for &i in &order {
            if assigned[i] != usize::MAX || labels[[i, j]] != 1 {
                continue;
            }
            let fold = (0..folds)
                .max_by(|&a, &b| {
                    want_label[j][a]
                        .total_cmp(&want_label[j][b])
                        .then(want_total[a].total_cmp(&want_total[b]))
                        .then(b.cmp(&a))
                })
                .expect("folds >= 2");
            assigned[i] = fold;
            want_total[fold] -= 1.0;
            for l in 0..q {
                if labels[[i, l]] == 1 {
                    want_label[l][fold] -= 1.0;
                    remaining[l] -= 1;
                }
            }
            left -= 1;
        }
    }
    for &i in &order {
        if assigned[i] == usize::MAX {
            let fold = (0..folds)
                .max_by(|&a, &b| want_total[a].total_cmp(&want_total[b]).then(b.cmp(&a)))
                .expect("folds >= 2");
            assigned[i] = fold;
            want_total[fold] -= 1.0;
            for l in 0..q {
                if labels[[i, l]] == 1 {
                    want_label[l][fold] -= 1.0;
                    remaining[l] -= 1;
                }
            }
        }
    }
    Ok(assigned)
}

#[derive(Debug, Clone)]
pub struct CvSettings {
    pub learner: LearnerKind,
    pub params: LearnerParams,
    pub sampler: Option<SamplerConfig>,
    pub protocol: CvProtocol,
    pub seed: u64,
}

pub(crate) fn sampler_tag(cfg: &SamplerConfig) -> String {
    format!("{}(p={}, k={})", cfg.method, cfg.p, cfg.k)
}

/// Drops labels whose training split lacks one class from both splits.
/// Returns the reduced splits and the names of the dropped labels.
pub fn guard_split(
    train_ds: &MultiLabelDataset,
    test_ds: &MultiLabelDataset,
) -> Result<(MultiLabelDataset, MultiLabelDataset, Vec<String>)> {
    let info = label_class_info(train_ds);
    let keep: Vec<usize> = (0..train_ds.q())
        .filter(|&j| info.labels[j].minority_count() > 0)
        .collect();
    let excluded: Vec<String> = (0..train_ds.q())
        .filter(|j| !keep.contains(j))
        .map(|j| train_ds.label_names()[j].clone())
        .collect();
    if keep.is_empty() {
        return Err(Error::InvalidDataset(
            "fold infeasible: no label has both classes in the training split".into(),
        ));
    }
    if excluded.is_empty() {
        Ok((train_ds.clone(), test_ds.clone(), excluded))
    } else {
        Ok((train_ds.select_labels(&keep)?, test_ds.select_labels(&keep)?, excluded))
    }
}

/// Trains on one split (optionally resampled), tunes thresholds on the
/// training data actually used, and evaluates on the untouched test split.
pub fn evaluate_split(
    train_ds: &MultiLabelDataset,
    test_ds: &MultiLabelDataset,
    learner: LearnerKind,
    params: &LearnerParams,
    sampler: Option<&SamplerConfig>,
) -> Result<EvaluationReport> {
    let (train_ds, test_ds, excluded) = guard_split(train_ds, test_ds)?;
    let fitted_on = match sampler {
        Some(cfg) => sample(&train_ds, cfg)?.dataset,
        None => train_ds,
    };
    let mut model = train(&fitted_on, learner, params)?;
    let thresholds = tune_thresholds(&model, &fitted_on)?;
    model.set_thresholds(thresholds)?;
    let scores = model.score_dataset(&test_ds)?;
    let mut report = macro_metrics(test_ds.labels(), &scores, &model.thresholds, test_ds.label_names())?;
    report.excluded = excluded;
    report.learner = Some(learner.to_string());
    report.sampler = sampler.map(sampler_tag);
    report.train_size = Some(fitted_on.n());
    report.test_size = Some(test_ds.n());
    Ok(report)
}

/// Repeated stratified k-fold evaluation; repeats and folds run in parallel and
/// are returned in `(repeat, fold)` order.
pub fn cross_validate(ds: &MultiLabelDataset, s: &CvSettings) -> Result<CvResult> {
    let CvProtocol { folds, repeats } = s.protocol;
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let assignments: Vec<Vec<usize>> = (0..repeats)
        .map(|r| stratified_folds(ds, folds, seeds::derive(s.seed, r as u64)))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..repeats).flat_map(|r| (0..folds).map(move |f| (r, f))).collect();
    let reports: Vec<EvaluationReport> = jobs
        .par_iter()
        .map(|&(r, f)| {
            let test: Vec<usize> = (0..ds.n()).filter(|&i| assignments[r][i] == f).collect();
            let train_rows: Vec<usize> = (0..ds.n()).filter(|&i| assignments[r][i] != f).collect();
            let sampler = s.sampler.map(|mut c| {
                c.rng_seed = seeds::derive2(c.rng_seed, r as u64, f as u64);
                c
            });
            let mut rep = evaluate_split(
                &ds.subset(&train_rows),
                &ds.subset(&test),
                s.learner,
                &s.params,
                sampler.as_ref(),
            )
            .map_err(|e| match e {
                Error::InvalidDataset(m) => Error::InvalidDataset(format!("repeat {r}, fold {f}: {m}")),
                other => other,
            })?;
            rep.repeat = Some(r);
            rep.fold = Some(f);
            rep.seed = Some(s.seed);
            Ok(rep)
        })
        .collect::<Result<_>>()?;
    let mean = mean_report(&reports);
    Ok(CvResult { reports, mean })
}
