//! Ensembles of sampler + learner pairs with averaged scores.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::evaluation::{
    disagreement, guard_split, macro_metrics, mean_report, stratified_folds, tune_thresholds_from_scores, CvProtocol,
    EvaluationReport, MeanReport,
};
use crate::learners::{threshold_matrix, train, LearnerKind, LearnerParams, TrainedModel};
use crate::sampling::{sample, Method, SamplerConfig};
use crate::seeds;

pub const OVERSAMPLING_RATIOS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const UNDERSAMPLING_RATIOS: [f64; 5] = [0.01, 0.05, 0.1, 0.15, 0.2];
pub const NEIGHBOR_SIZES: [usize; 5] = [5, 6, 7, 8, 9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diversify {
    SeedOnly,
    VaryP,
    VaryK,
}

impl fmt::Display for Diversify {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Diversify::SeedOnly => "seed",
            Diversify::VaryP => "p",
            Diversify::VaryK => "k",
        })
    }
}

impl FromStr for Diversify {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "seed" | "seed_only" => Ok(Diversify::SeedOnly),
            "p" | "vary_p" => Ok(Diversify::VaryP),
            "k" | "vary_k" => Ok(Diversify::VaryK),
            _ => Err(Error::InvalidArgument(format!(
                "unknown diversification `{s}` (expected seed, p or k)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberInfo {
    pub config: SamplerConfig,
    pub sample_size: usize,
    /// SHA-256 of the member's sampled dataset and provenance.
    pub sample_digest: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub members: Vec<TrainedModel>,
    pub member_info: Vec<MemberInfo>,
    pub diversify: Diversify,
    pub master_seed: u64,
    /// Tuned on the averaged member scores over the original training set.
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EnsembleSettings {
    pub sampler: SamplerConfig,
    pub learner: LearnerKind,
    pub params: LearnerParams,
    pub members: usize,
    pub diversify: Diversify,
}

/// Sampler configuration of member `i`.
pub fn member_config(base: &SamplerConfig, diversify: Diversify, master_seed: u64, i: usize) -> SamplerConfig {
    let mut c = *base;
    c.rng_seed = seeds::derive(master_seed, i as u64);
    match diversify {
        Diversify::SeedOnly => {}
        Diversify::VaryP => {
            let grid = match base.method {
                Method::Mlsol | Method::Mlros => &OVERSAMPLING_RATIOS,
                Method::Mlul | Method::Mlrus => &UNDERSAMPLING_RATIOS,
            };
            c.p = grid[i % grid.len()];
        }
        Diversify::VaryK => c.k = NEIGHBOR_SIZES[i % NEIGHBOR_SIZES.len()],
    }
    c
}

fn digest(ds: &MultiLabelDataset, provenance: &impl Serialize) -> Result<String> {
    let mut h = Sha256::new();
    h.update(ds.feature_hash().as_bytes());
    h.update(ds.labels().iter().copied().collect::<Vec<u8>>());
    h.update(serde_json::to_vec(provenance)?);
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub fn train_emls(ds: &MultiLabelDataset, s: &EnsembleSettings, master_seed: u64) -> Result<EnsembleModel> {
    if s.members < 2 {
        return Err(Error::InvalidArgument(format!(
            "an ensemble needs at least 2 members, got {}",
            s.members
        )));
    }
    let configs: Vec<SamplerConfig> = (0..s.members)
        .map(|i| member_config(&s.sampler, s.diversify, master_seed, i))
        .collect();
    let trained: Vec<(TrainedModel, MemberInfo)> = configs
        .par_iter()
        .map(|cfg| {
            let out = sample(ds, cfg)?;
            let model = train(&out.dataset, s.learner, &s.params)?;
            let info = MemberInfo {
                config: *cfg,
                sample_size: out.dataset.n(),
                sample_digest: digest(&out.dataset, &out.provenance)?,
                warnings: out.warnings,
            };
            Ok((model, info))
        })
        .collect::<Result<_>>()?;
    let (members, member_info): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    let mut model = EnsembleModel {
        members,
        member_info,
        diversify: s.diversify,
        master_seed,
        thresholds: vec![0.5; ds.q()],
    };
    let scores = model.score_dataset(ds)?;
    model.thresholds = tune_thresholds_from_scores(ds.labels(), &scores);
    Ok(model)
}

impl EnsembleModel {
    pub fn q(&self) -> usize {
        self.thresholds.len()
    }

    /// Mean of the member scores.
    pub fn score(&self, row: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.q()];
        for m in &self.members {
            for (a, s) in acc.iter_mut().zip(m.score(row)?) {
                *a += s;
            }
        }
        let m = self.members.len() as f64;
        Ok(acc.into_iter().map(|a| a / m).collect())
    }

    pub fn score_dataset(&self, ds: &MultiLabelDataset) -> Result<Array2<f64>> {
        let mut acc = Array2::<f64>::zeros((ds.n(), self.q()));
        for m in &self.members {
            acc += &m.score_dataset(ds)?;
        }
        Ok(acc / self.members.len() as f64)
    }

    pub fn predict_dataset(&self, ds: &MultiLabelDataset) -> Result<Array2<u8>> {
        Ok(threshold_matrix(&self.score_dataset(ds)?, &self.thresholds))
    }

    /// Pairwise disagreement of member predictions at the untuned 0.5 thresholds.
    pub fn disagreement(&self, test: &MultiLabelDataset) -> Result<f64> {
        let half = vec![0.5; self.q()];
        let preds: Vec<Array2<u8>> = self
            .members
            .iter()
            .map(|m| Ok(threshold_matrix(&m.score_dataset(test)?, &half)))
            .collect::<Result<_>>()?;
        disagreement(&preds)
    }
}

pub fn ensemble_score(model: &EnsembleModel, row: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
    model.score(row)
}

pub fn ensemble_disagreement(model: &EnsembleModel, test: &MultiLabelDataset) -> Result<f64> {
    model.disagreement(test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEvaluation {
    pub report: EvaluationReport,
    pub disagreement: f64,
}

/// Trains an ensemble on `train_ds` and evaluates it on `test_ds`.
pub fn evaluate_ensemble_split(
    train_ds: &MultiLabelDataset,
    test_ds: &MultiLabelDataset,
    s: &EnsembleSettings,
    master_seed: u64,
) -> Result<EnsembleEvaluation> {
    let (train_ds, test_ds, excluded) = guard_split(train_ds, test_ds)?;
    let model = train_emls(&train_ds, s, master_seed)?;
    let scores = model.score_dataset(&test_ds)?;
    let mut report = macro_metrics(test_ds.labels(), &scores, &model.thresholds, test_ds.label_names())?;
    report.excluded = excluded;
    report.learner = Some(s.learner.to_string());
    report.sampler = Some(format!("emls[{}x{}, {}]", s.members, s.sampler.method, s.diversify));
    report.seed = Some(master_seed);
    report.train_size = Some(train_ds.n());
    report.test_size = Some(test_ds.n());
    Ok(EnsembleEvaluation {
        report,
        disagreement: model.disagreement(&test_ds)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCvResult {
    pub runs: Vec<EnsembleEvaluation>,
    pub mean: MeanReport,
    pub mean_disagreement: f64,
}

/// Repeated stratified cross-validation of an ensemble, folds in `(repeat, fold)` order.
pub fn cross_validate_ensemble(
    ds: &MultiLabelDataset,
    s: &EnsembleSettings,
    protocol: CvProtocol,
    seed: u64,
) -> Result<EnsembleCvResult> {
    if protocol.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let mut runs = Vec::new();
    for r in 0..protocol.repeats {
        let assign = stratified_folds(ds, protocol.folds, seeds::derive(seed, r as u64))?;
        for f in 0..protocol.folds {
            let test: Vec<usize> = (0..ds.n()).filter(|&i| assign[i] == f).collect();
            let train_rows: Vec<usize> = (0..ds.n()).filter(|&i| assign[i] != f).collect();
            let master = seeds::derive2(seed, r as u64, f as u64);
            let mut ev = evaluate_ensemble_split(&ds.subset(&train_rows), &ds.subset(&test), s, master)?;
            ev.report.repeat = Some(r);
            ev.report.fold = Some(f);
            runs.push(ev);
        }
    }
    let reports: Vec<EvaluationReport> = runs.iter().map(|e| e.report.clone()).collect();
    let mean_disagreement = runs.iter().map(|e| e.disagreement).sum::<f64>() / runs.len() as f64;
    Ok(EnsembleCvResult {
        mean: mean_report(&reports),
        runs,
        mean_disagreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureColumn;
    use crate::learners::{LabelScorer, ModelParams};
    use std::collections::HashSet;

    fn toy() -> MultiLabelDataset {
        let n = 40;
        MultiLabelDataset::new(
            "t",
            vec![FeatureColumn::numeric("x"), FeatureColumn::numeric("y")],
            Array2::from_shape_fn((n, 2), |(i, j)| {
                ((i * 13 + j * 7) % 17) as f64 / 17.0 + i as f64 * 0.001
            }),
            vec!["a".into(), "b".into()],
            Array2::from_shape_fn((n, 2), |(i, j)| u8::from(if j == 0 { i % 4 == 0 } else { i % 3 != 0 })),
        )
        .unwrap()
    }

    fn settings(method: Method, diversify: Diversify, members: usize) -> EnsembleSettings {
        EnsembleSettings {
            sampler: SamplerConfig::new(method, method.default_ratio(), 5, 0),
            learner: LearnerKind::BrLinear,
            params: LearnerParams::default(),
            members,
            diversify,
        }
    }

    #[test]
    fn seed_only_members_are_distinct() {
        let m = train_emls(&toy(), &settings(Method::Mlsol, Diversify::SeedOnly, 5), 3).unwrap();
        let seeds: HashSet<u64> = m.member_info.iter().map(|i| i.config.rng_seed).collect();
        let digests: HashSet<&String> = m.member_info.iter().map(|i| &i.sample_digest).collect();
        assert_eq!(seeds.len(), 5);
        assert_eq!(digests.len(), 5);
        assert!(m.member_info.iter().all(|i| i.config.p == 0.3 && i.config.k == 5));
    }

    #[test]
    fn vary_k_grid() {
        let m = train_emls(&toy(), &settings(Method::Mlsol, Diversify::VaryK, 5), 3).unwrap();
        let ks: Vec<usize> = m.member_info.iter().map(|i| i.config.k).collect();
        assert_eq!(ks, vec![5, 6, 7, 8, 9]);
        let c = member_config(&SamplerConfig::new(Method::Mlul, 0.1, 5, 0), Diversify::VaryP, 1, 6);
        assert_eq!(c.p, 0.05);
    }

    #[test]
    fn single_member_rejected() {
        assert!(train_emls(&toy(), &settings(Method::Mlsol, Diversify::SeedOnly, 1), 3).is_err());
    }

    #[test]
    fn averaging_constant_members() {
        let ds = toy();
        let mut m = train_emls(&ds, &settings(Method::Mlros, Diversify::SeedOnly, 2), 3).unwrap();
        for (model, rate) in m.members.iter_mut().zip([0.2, 0.8]) {
            if let ModelParams::BrLinear { labels, .. } = &mut model.params {
                for l in labels.iter_mut() {
                    *l = LabelScorer::Constant { rate };
                }
            }
        }
        assert_eq!(ensemble_score(&m, ds.row(0)).unwrap(), vec![0.5, 0.5]);
        let first = m.members[0].clone();
        m.members[1] = first;
        assert_eq!(ensemble_disagreement(&m, &ds).unwrap(), 0.0);
        assert_eq!(m.score(ds.row(3)).unwrap(), m.members[0].score(ds.row(3)).unwrap());
    }

    #[test]
    fn deterministic() {
        let s = settings(Method::Mlsol, Diversify::VaryP, 3);
        assert_eq!(train_emls(&toy(), &s, 9).unwrap(), train_emls(&toy(), &s, 9).unwrap());
    }
}
