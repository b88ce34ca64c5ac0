use std::fmt;

use serde::{Deserialize, Serialize};

use super::cv::{cross_validate, CvProtocol, CvSettings, MeanReport};
use crate::dataset::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::imbalance::{global_measures, limb};
use crate::learners::{LearnerKind, LearnerParams};
use crate::neighbors::build_index;

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 3 points, got {}",
            xs.len()
        )));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(xs) || constant(ys) {
        return Err(Error::Undefined("correlation with a zero-variance series".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    MeanIr,
    Cvir,
    MeanImr,
    Cvimr,
    Scumble,
    Limb,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::MeanIr,
        Measure::Cvir,
        Measure::MeanImr,
        Measure::Cvimr,
        Measure::Scumble,
        Measure::Limb,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::MeanIr => "MeanIR",
            Measure::Cvir => "CVIR",
            Measure::MeanImr => "MeanImR",
            Measure::Cvimr => "CVImR",
            Measure::Scumble => "SCUMBLE",
            Measure::Limb => "LImb",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MacroF1,
    MacroAucRoc,
    MacroAucpr,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::MacroF1, Metric::MacroAucRoc, Metric::MacroAucpr];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::MacroF1 => "macro_f1",
            Metric::MacroAucRoc => "macro_auc_roc",
            Metric::MacroAucpr => "macro_aucpr",
        }
    }

    pub fn of(&self, r: &MeanReport) -> f64 {
        match self {
            Metric::MacroF1 => r.macro_f1,
            Metric::MacroAucRoc => r.macro_auc_roc,
            Metric::MacroAucpr => r.macro_aucpr,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeasures {
    pub mean_ir: f64,
    pub cvir: f64,
    pub mean_imr: f64,
    pub cvimr: f64,
    pub scumble: f64,
    pub limb: f64,
}

impl DatasetMeasures {
    pub fn compute(ds: &MultiLabelDataset, k: usize) -> Result<Self> {
        let g = global_measures(ds)?;
        let idx = build_index(ds, k)?;
        Ok(DatasetMeasures {
            mean_ir: g.mean_ir,
            cvir: g.cvir,
            mean_imr: g.mean_imr,
            cvimr: g.cvimr,
            scumble: g.scumble,
            limb: limb(ds, &idx)?,
        })
    }

    pub fn get(&self, m: Measure) -> f64 {
        match m {
            Measure::MeanIr => self.mean_ir,
            Measure::Cvir => self.cvir,
            Measure::MeanImr => self.mean_imr,
            Measure::Cvimr => self.cvimr,
            Measure::Scumble => self.scumble,
            Measure::Limb => self.limb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub measure: Measure,
    pub learner: LearnerKind,
    pub metric: Metric,
    /// `None` when undefined (a constant series); see `error`.
    pub rho: Option<f64>,
    /// Rank of `|rho|` among the measures of the same (learner, metric) row,
    /// 1 = strongest; ties share the mean rank.
    pub rank: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub name: String,
    pub measures: DatasetMeasures,
    /// Mean cross-validated performance per learner, in learner order.
    pub performance: Vec<(LearnerKind, MeanReport)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub datasets: Vec<DatasetRecord>,
    pub entries: Vec<CorrelationEntry>,
}

impl CorrelationTable {
    pub fn rho(&self, measure: Measure, learner: LearnerKind, metric: Metric) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.measure == measure && e.learner == learner && e.metric == metric)
            .and_then(|e| e.rho)
    }
}

/// Ranks of `|v|`, descending, with averaged ties; `None` entries stay unranked.
fn abs_ranks(values: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut present: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|x| (i, x.abs())))
        .collect();
    present.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut out = vec![None; values.len()];
    let mut i = 0;
    while i < present.len() {
        let mut j = i;
        while j + 1 < present.len() && present[j + 1].1 == present[i].1 {
            j += 1;
        }
        let r = (i + j + 2) as f64 / 2.0;
        for p in &present[i..=j] {
            out[p.0] = Some(r);
        }
        i = j + 1;
    }
    out
}

/// Correlation table from precomputed measures and performances.
pub fn correlation_table(records: Vec<DatasetRecord>) -> Result<CorrelationTable> {
    if records.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "correlating measures needs at least 3 datasets, got {}",
            records.len()
        )));
    }
    let learners: Vec<LearnerKind> = records[0].performance.iter().map(|(l, _)| *l).collect();
    let mut entries = Vec::new();
    for (li, &learner) in learners.iter().enumerate() {
        for metric in Metric::ALL {
            let ys: Vec<f64> = records.iter().map(|r| metric.of(&r.performance[li].1)).collect();
            let row: Vec<(Measure, Result<f64>)> = Measure::ALL
                .iter()
                .map(|&m| {
                    let xs: Vec<f64> = records.iter().map(|r| r.measures.get(m)).collect();
                    (m, pearson(&xs, &ys))
                })
                .collect();
            let rhos: Vec<Option<f64>> = row.iter().map(|(_, r)| r.as_ref().ok().copied()).collect();
            let ranks = abs_ranks(&rhos);
            for ((measure, r), rank) in row.into_iter().zip(ranks) {
                entries.push(CorrelationEntry {
                    measure,
                    learner,
                    metric,
                    rho: r.as_ref().ok().copied(),
                    rank,
                    error: r.err().map(|e| e.to_string()),
                });
            }
        }
    }
    if entries.iter().all(|e| e.rho.is_none()) {
        return Err(Error::Undefined(
            "every correlation is undefined (zero variance across datasets)".into(),
        ));
    }
    Ok(CorrelationTable {
        datasets: records,
        entries,
    })
}

/// Measures every dataset, cross-validates every learner on it, and correlates
/// each measure with each mean performance metric across datasets.
pub fn correlate_measures(
    datasets: &[(String, MultiLabelDataset)],
    learners: &[LearnerKind],
    params: &LearnerParams,
    k: usize,
    protocol: CvProtocol,
    seed: u64,
) -> Result<CorrelationTable> {
    if datasets.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "correlating measures needs at least 3 datasets, got {}",
            datasets.len()
        )));
    }
    let mut records = Vec::with_capacity(datasets.len());
    for (name, ds) in datasets {
        let measures = DatasetMeasures::compute(ds, k).map_err(|e| Error::InvalidDataset(format!("{name}: {e}")))?;
        let mut performance = Vec::new();
        for &learner in learners {
            let s = CvSettings {
                learner,
                params: *params,
                sampler: None,
                protocol,
                seed,
            };
            let r = cross_validate(ds, &s).map_err(|e| Error::InvalidDataset(format!("{name}: {e}")))?;
            performance.push((learner, r.mean));
        }
        records.push(DatasetRecord {
            name: name.clone(),
            measures,
            performance,
        });
    }
    correlation_table(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Undefined(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        let r = abs_ranks(&[Some(-0.9), Some(0.5), None, Some(0.5), Some(0.1)]);
        assert_eq!(r, vec![Some(1.0), Some(2.5), None, Some(2.5), Some(4.0)]);
    }

    fn record(i: usize, limb: f64, scumble: f64, aucpr: f64) -> DatasetRecord {
        DatasetRecord {
            name: format!("d{i}"),
            measures: DatasetMeasures {
                mean_ir: 1.0 + i as f64,
                cvir: 0.1,
                mean_imr: 2.0,
                cvimr: 0.3,
                scumble,
                limb,
            },
            performance: vec![(
                LearnerKind::Mlknn,
                MeanReport {
                    macro_f1: aucpr,
                    macro_auc_roc: aucpr,
                    macro_aucpr: aucpr,
                    runs: 1,
                },
            )],
        }
    }

    #[test]
    fn constant_measure_fails_only_its_entry() {
        let t = correlation_table(vec![
            record(0, 0.1, 0.0, 0.9),
            record(1, 0.3, 0.1, 0.7),
            record(2, 0.6, 0.05, 0.4),
        ])
        .unwrap();
        assert!(t.rho(Measure::Limb, LearnerKind::Mlknn, Metric::MacroAucpr).unwrap() < -0.9);
        let e = t
            .entries
            .iter()
            .find(|e| e.measure == Measure::Cvir && e.metric == Metric::MacroAucpr)
            .unwrap();
        assert!(e.rho.is_none() && e.error.is_some() && e.rank.is_none());
    }

    #[test]
    fn repeated_dataset_is_undefined() {
        let r = || record(1, 0.3, 0.1, 0.7);
        assert!(matches!(
            correlation_table(vec![r(), r(), r()]),
            Err(Error::Undefined(_))
        ));
    }
}
