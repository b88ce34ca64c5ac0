//! In-memory multi-label dataset, its file formats and the preprocessing filters.
//!
//! A dataset holds an `n x d` feature matrix and an `n x q` binary label matrix.
//! Numeric cells store the real value; nominal cells store the category index
//! into the column's value list (as an `f64` holding a small integer).

mod arff;
mod csv_format;

pub use arff::{parse_mulan, parse_mulan_with_report, write_arff, write_mulan_xml};
pub use csv_format::{parse_csv, parse_csv_with_report, write_csv};

use std::collections::HashSet;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: ColumnKind,
}

impl FeatureColumn {
    pub fn numeric(name: impl Into<String>) -> Self {
        FeatureColumn {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn nominal(name: impl Into<String>, values: Vec<String>) -> Self {
        FeatureColumn {
            name: name.into(),
            kind: ColumnKind::Nominal(values),
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, ColumnKind::Numeric)
    }
}

/// What the parser had to repair while reading a file.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParseReport {
    /// Missing numeric cells, imputed as 0.
    pub imputed_numeric: usize,
    /// Missing nominal cells, imputed with the column's most frequent category.
    pub imputed_nominal: usize,
    /// Names of columns that contained at least one missing cell.
    pub columns_with_missing: Vec<String>,
}

impl ParseReport {
    pub fn is_clean(&self) -> bool {
        self.imputed_numeric == 0 && self.imputed_nominal == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelDataset {
    relation: String,
    columns: Vec<FeatureColumn>,
    features: Array2<f64>,
    label_names: Vec<String>,
    labels: Array2<u8>,
}

impl MultiLabelDataset {
    pub fn new(
        relation: impl Into<String>,
        columns: Vec<FeatureColumn>,
        features: Array2<f64>,
        label_names: Vec<String>,
        labels: Array2<u8>,
    ) -> Result<Self> {
        let ds = MultiLabelDataset {
            relation: relation.into(),
            columns,
            features,
            label_names,
            labels,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let (n, d) = self.features.dim();
        let (ln, q) = self.labels.dim();
        if n == 0 {
            return Err(Error::InvalidDataset("dataset has no instances (n = 0)".into()));
        }
        if d == 0 {
            return Err(Error::InvalidDataset("dataset has no feature columns (d = 0)".into()));
        }
        if q == 0 {
            return Err(Error::InvalidDataset("dataset has no labels (q = 0)".into()));
        }
        if ln != n {
            return Err(Error::InvalidDataset(format!(
                "feature matrix has {n} rows but label matrix has {ln}"
            )));
        }
        if self.columns.len() != d {
            return Err(Error::InvalidDataset(format!(
                "{} column descriptors for {d} feature cells per row",
                self.columns.len()
            )));
        }
        if self.label_names.len() != q {
            return Err(Error::InvalidDataset(format!(
                "{} label names for {q} label columns",
                self.label_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate column name `{}`", c.name)));
            }
            if let ColumnKind::Nominal(values) = &c.kind {
                if values.is_empty() {
                    return Err(Error::InvalidDataset(format!(
                        "nominal column `{}` has an empty value list",
                        c.name
                    )));
                }
                let distinct: HashSet<&String> = values.iter().collect();
                if distinct.len() != values.len() {
                    return Err(Error::InvalidDataset(format!(
                        "nominal column `{}` lists a value twice",
                        c.name
                    )));
                }
            }
        }
        for name in &self.label_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::label(
                    name,
                    "label name is duplicated or collides with a feature name",
                ));
            }
        }
        for (j, c) in self.columns.iter().enumerate() {
            let col = self.features.column(j);
            match &c.kind {
                ColumnKind::Numeric => {
                    if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                        return Err(Error::InvalidDataset(format!(
                            "non-finite value in column `{}` at row {i}",
                            c.name
                        )));
                    }
                }
                ColumnKind::Nominal(values) => {
                    let m = values.len() as f64;
                    if let Some(i) = col.iter().position(|&v| !(v >= 0.0 && v < m && v.fract() == 0.0)) {
                        return Err(Error::InvalidDataset(format!(
                            "invalid category index in column `{}` at row {i}",
                            c.name
                        )));
                    }
                }
            }
        }
        if let Some(((i, j), _)) = self.labels.indexed_iter().find(|(_, &v)| v > 1) {
            return Err(Error::label(
                &self.label_names[j],
                format!("non-binary cell at row {i}"),
            ));
        }
        Ok(())
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn q(&self) -> usize {
        self.labels.ncols()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &Array2<u8> {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn label_row(&self, i: usize) -> ArrayView1<'_, u8> {
        self.labels.row(i)
    }

    pub fn has_same_schema(&self, other: &MultiLabelDataset) -> bool {
        self.columns == other.columns && self.label_names == other.label_names
    }

    /// Rows in the given order; ids may repeat.
    pub fn subset(&self, rows: &[usize]) -> MultiLabelDataset {
        MultiLabelDataset {
            relation: self.relation.clone(),
            columns: self.columns.clone(),
            features: self.features.select(Axis(0), rows),
            label_names: self.label_names.clone(),
            labels: self.labels.select(Axis(0), rows),
        }
    }

    pub fn select_labels(&self, keep: &[usize]) -> Result<MultiLabelDataset> {
        if keep.is_empty() {
            return Err(Error::InvalidDataset("label selection is empty".into()));
        }
        Ok(MultiLabelDataset {
            relation: self.relation.clone(),
            columns: self.columns.clone(),
            features: self.features.clone(),
            label_names: keep.iter().map(|&j| self.label_names[j].clone()).collect(),
            labels: self.labels.select(Axis(1), keep),
        })
    }

    pub fn select_features(&self, keep: &[usize]) -> Result<MultiLabelDataset> {
        if keep.is_empty() {
            return Err(Error::InvalidDataset("feature selection is empty".into()));
        }
        Ok(MultiLabelDataset {
            relation: self.relation.clone(),
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            features: self.features.select(Axis(1), keep),
            label_names: self.label_names.clone(),
            labels: self.labels.clone(),
        })
    }

    /// Appends rows that share this dataset's schema.
    pub fn append(&self, features: &Array2<f64>, labels: &Array2<u8>) -> Result<MultiLabelDataset> {
        if features.ncols() != self.d() || labels.ncols() != self.q() {
            return Err(Error::SchemaMismatch(format!(
                "appending {}x{} features / {} labels to a dataset with d={} q={}",
                features.nrows(),
                features.ncols(),
                labels.ncols(),
                self.d(),
                self.q()
            )));
        }
        let f = ndarray::concatenate(Axis(0), &[self.features.view(), features.view()])
            .map_err(|e| Error::InvalidDataset(e.to_string()))?;
        let l = ndarray::concatenate(Axis(0), &[self.labels.view(), labels.view()])
            .map_err(|e| Error::InvalidDataset(e.to_string()))?;
        MultiLabelDataset::new(
            self.relation.clone(),
            self.columns.clone(),
            f,
            self.label_names.clone(),
            l,
        )
    }

    pub fn summary(&self) -> DatasetSummary {
        let total: usize = self.labels.iter().map(|&v| v as usize).sum();
        let cardinality = total as f64 / self.n() as f64;
        DatasetSummary {
            n: self.n(),
            d: self.d(),
            q: self.q(),
            cardinality,
            density: cardinality / self.q() as f64,
        }
    }

    pub fn label_class_info(&self) -> LabelClassInfo {
        label_class_info(self)
    }

    /// Hex SHA-256 over the feature schema and feature cells. Labels are not
    /// included: the neighbor structure depends on features alone.
    pub fn feature_hash(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.columns {
            h.update(c.name.as_bytes());
            h.update([0u8]);
            match &c.kind {
                ColumnKind::Numeric => h.update([1u8]),
                ColumnKind::Nominal(vals) => {
                    h.update([2u8]);
                    for v in vals {
                        h.update(v.as_bytes());
                        h.update([0u8]);
                    }
                }
            }
        }
        h.update((self.n() as u64).to_le_bytes());
        for v in self.features.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub cardinality: f64,
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelClass {
    pub count_pos: usize,
    pub count_neg: usize,
    pub majority: u8,
    pub minority: u8,
}

impl LabelClass {
    pub fn minority_count(&self) -> usize {
        if self.minority == 1 {
            self.count_pos
        } else {
            self.count_neg
        }
    }

    pub fn majority_count(&self) -> usize {
        if self.majority == 1 {
            self.count_pos
        } else {
            self.count_neg
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelClassInfo {
    pub labels: Vec<LabelClass>,
}

impl LabelClassInfo {
    pub fn minority(&self, j: usize) -> u8 {
        self.labels[j].minority
    }

    pub fn majority(&self, j: usize) -> u8 {
        self.labels[j].majority
    }
}

/// Per-label class counts. A tie resolves to majority = 0, minority = 1.
pub fn label_class_info(ds: &MultiLabelDataset) -> LabelClassInfo {
    let n = ds.n();
    let labels = ds
        .labels()
        .columns()
        .into_iter()
        .map(|col| {
            let count_pos = col.iter().filter(|&&v| v == 1).count();
            let count_neg = n - count_pos;
            let (majority, minority) = if count_pos > count_neg { (1, 0) } else { (0, 1) };
            LabelClass {
                count_pos,
                count_neg,
                majority,
                minority,
            }
        })
        .collect();
    LabelClassInfo { labels }
}

/// Removes labels whose minority class has fewer than `min_minority` instances.
pub fn drop_rare_labels(ds: &MultiLabelDataset, min_minority: usize) -> Result<MultiLabelDataset> {
    let info = label_class_info(ds);
    let keep: Vec<usize> = info
        .labels
        .iter()
        .enumerate()
        .filter(|(_, c)| c.minority_count() >= min_minority)
        .map(|(j, _)| j)
        .collect();
    if keep.is_empty() {
        return Err(Error::InvalidDataset(format!(
            "every label has fewer than {min_minority} minority instances; label space would be empty"
        )));
    }
    if keep.len() == ds.q() {
        return Ok(ds.clone());
    }
    ds.select_labels(&keep)
}

/// Keeps the `ceil(keep_fraction * d)` feature columns with the most non-zero
/// cells, ties broken by column order. Kept columns stay in original order.
pub fn filter_features_by_frequency(ds: &MultiLabelDataset, keep_fraction: f64) -> Result<MultiLabelDataset> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "keep_fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    let d = ds.d();
    // The epsilon keeps products such as 0.3 * 10 = 3.0000000000000004 at 3.
    let keep = ((keep_fraction * d as f64) - 1e-9).ceil().max(1.0) as usize;
    let keep = keep.min(d);
    if keep == d {
        return Ok(ds.clone());
    }
    let counts: Vec<usize> = ds
        .features()
        .columns()
        .into_iter()
        .map(|c| c.iter().filter(|&&v| v != 0.0).count())
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = order[..keep].to_vec();
    kept.sort_unstable();
    ds.select_features(&kept)
}
