use serde::{Deserialize, Serialize};

use crate::dataset::{label_class_info, MultiLabelDataset};
use crate::error::{Error, Result};

/// Label-frequency based imbalance measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalMeasures {
    /// `max_k n_k^1 / n_j^1` per label.
    pub irlbl: Vec<f64>,
    /// Majority over minority count per label.
    pub imr: Vec<f64>,
    pub mean_ir: f64,
    pub cvir: f64,
    pub mean_imr: f64,
    pub cvimr: f64,
    pub scumble: f64,
    /// Per-instance concurrence score; 0 for instances with no active label.
    pub scuins: Vec<f64>,
}

impl GlobalMeasures {
    /// Labels whose IRLbl exceeds MeanIR.
    pub fn minority_labels(&self) -> Vec<usize> {
        self.irlbl
            .iter()
            .enumerate()
            .filter(|(_, &ir)| ir > self.mean_ir)
            .map(|(j, _)| j)
            .collect()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Coefficient of variation with the `q - 1` denominator; 0 when `q = 1`.
pub(crate) fn coefficient_of_variation(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt() / m
}

fn irlbl_of(ds: &MultiLabelDataset) -> Result<Vec<f64>> {
    let info = label_class_info(ds);
    if let Some(j) = info.labels.iter().position(|c| c.count_pos == 0) {
        return Err(Error::label(
            &ds.label_names()[j],
            "no positive instances, IRLbl is undefined (drop rare labels first)",
        ));
    }
    let max_pos = info.labels.iter().map(|c| c.count_pos).max().unwrap_or(0) as f64;
    Ok(info.labels.iter().map(|c| max_pos / c.count_pos as f64).collect())
}

/// Labels whose IRLbl exceeds MeanIR. Needs only positive counts, so it is
/// defined for labels that are positive everywhere.
pub fn minority_labels(ds: &MultiLabelDataset) -> Result<Vec<usize>> {
    let irlbl = irlbl_of(ds)?;
    let m = mean(&irlbl);
    Ok((0..irlbl.len()).filter(|&j| irlbl[j] > m).collect())
}

pub fn global_measures(ds: &MultiLabelDataset) -> Result<GlobalMeasures> {
    let info = label_class_info(ds);
    let irlbl = irlbl_of(ds)?;
    for (j, c) in info.labels.iter().enumerate() {
        if c.minority_count() == 0 {
            return Err(Error::label(
                &ds.label_names()[j],
                "no minority-class instances, ImR is undefined (drop rare labels first)",
            ));
        }
    }
    let imr: Vec<f64> = info
        .labels
        .iter()
        .map(|c| c.majority_count() as f64 / c.minority_count() as f64)
        .collect();

    let scuins: Vec<f64> = ds
        .labels()
        .rows()
        .into_iter()
        .map(|row| {
            let active: Vec<f64> = row
                .iter()
                .zip(&irlbl)
                .filter(|(&y, _)| y == 1)
                .map(|(_, &ir)| ir)
                .collect();
            if active.is_empty() {
                return 0.0;
            }
            let arith = mean(&active);
            let geo = (active.iter().map(|v| v.ln()).sum::<f64>() / active.len() as f64).exp();
            (1.0 - geo / arith).clamp(0.0, 1.0)
        })
        .collect();

    Ok(GlobalMeasures {
        mean_ir: mean(&irlbl),
        cvir: coefficient_of_variation(&irlbl),
        mean_imr: mean(&imr),
        cvimr: coefficient_of_variation(&imr),
        scumble: mean(&scuins),
        irlbl,
        imr,
        scuins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureColumn;
    use ndarray::{array, Array2};

    fn ds(labels: Array2<u8>) -> MultiLabelDataset {
        let n = labels.nrows();
        MultiLabelDataset::new(
            "t",
            vec![FeatureColumn::numeric("x")],
            Array2::zeros((n, 1)),
            (0..labels.ncols()).map(|j| format!("l{j}")).collect(),
            labels,
        )
        .unwrap()
    }

    #[test]
    fn balanced_identical_labels() {
        let g = global_measures(&ds(array![[1, 1], [0, 0], [1, 1], [0, 0]])).unwrap();
        assert_eq!(g.irlbl, vec![1.0, 1.0]);
        assert_eq!(g.mean_ir, 1.0);
        assert_eq!(g.cvir, 0.0);
        assert_eq!(g.scumble, 0.0);
    }

    #[test]
    fn single_label_imr() {
        let g = global_measures(&ds(array![[1], [0], [0], [0]])).unwrap();
        assert_eq!(g.imr, vec![3.0]);
        assert_eq!(g.mean_imr, 3.0);
        assert_eq!(g.cvimr, 0.0);
        assert_eq!(g.cvir, 0.0);
    }

    #[test]
    fn label_without_positives_is_named() {
        let err = global_measures(&ds(array![[1, 0], [0, 0]])).unwrap_err();
        assert!(err.to_string().contains("l1"), "{err}");
    }

    #[test]
    fn scumble_hand_value() {
        // counts: l0 = 3, l1 = 1 -> IRLbl = [1, 3]; rows: {l0,l1}, {l0}, {l0}, {}
        let g = global_measures(&ds(array![[1, 1], [1, 0], [1, 0], [0, 0]])).unwrap();
        let expected_row0 = 1.0 - 3f64.sqrt() / 2.0;
        assert!((g.scuins[0] - expected_row0).abs() < 1e-12);
        assert_eq!(&g.scuins[1..], &[0.0, 0.0, 0.0]);
        assert!((g.scumble - expected_row0 / 4.0).abs() < 1e-12);
        assert_eq!(g.minority_labels(), vec![1]);
    }

    #[test]
    fn minority_zero_labels_use_printed_irlbl() {
        // l0 positives 3 of 4 (minority class 0), l1 positives 1 of 4
        let g = global_measures(&ds(array![[1, 1], [1, 0], [1, 0], [0, 0]])).unwrap();
        assert_eq!(g.irlbl[0], 1.0);
        assert_eq!(g.imr[0], 3.0);
    }
}
