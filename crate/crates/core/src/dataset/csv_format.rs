//! CSV with a header row and the labels as the trailing `q` columns.
//!
//! A feature column is numeric when every present cell parses as a finite
//! number; otherwise it becomes nominal with values in order of first
//! appearance. Empty cells and `?` are missing.

use ndarray::Array2;

use super::arff::impute_missing;
use super::{ColumnKind, FeatureColumn, MultiLabelDataset, ParseReport};
use crate::error::{Error, Result};

/// Guard against free-text columns being read as categories.
const MAX_NOMINAL_VALUES: usize = 4096;

pub fn parse_csv(csv_text: &str, label_count: usize) -> Result<MultiLabelDataset> {
    parse_csv_with_report(csv_text, label_count).map(|(ds, _)| ds)
}

pub fn parse_csv_with_report(csv_text: &str, label_count: usize) -> Result<(MultiLabelDataset, ParseReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::parse(1, "missing header row"));
    }
    let width = header.len();
    if label_count == 0 {
        return Err(Error::InvalidArgument("label count must be at least 1".into()));
    }
    if label_count >= width {
        return Err(Error::InvalidArgument(format!(
            "label count {label_count} leaves no feature columns among {width} columns"
        )));
    }
    let d = width - label_count;

    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != width {
            return Err(Error::parse(
                line,
                format!("ragged row: expected {width} cells, found {}", rec.len()),
            ));
        }
        rows.push((line, rec.iter().map(|c| c.trim().to_string()).collect()));
    }
    if rows.is_empty() {
        return Err(Error::InvalidDataset("CSV has no data rows (n = 0)".into()));
    }

    let n = rows.len();
    let is_missing = |s: &str| s.is_empty() || s == "?";
    let mut columns = Vec::with_capacity(d);
    for (j, name) in header.iter().take(d).enumerate() {
        let numeric = rows
            .iter()
            .all(|(_, r)| is_missing(&r[j]) || r[j].parse::<f64>().is_ok_and(f64::is_finite));
        if numeric {
            columns.push(FeatureColumn::numeric(name.clone()));
        } else {
            let mut values: Vec<String> = Vec::new();
            for (_, r) in &rows {
                if !is_missing(&r[j]) && !values.contains(&r[j]) {
                    values.push(r[j].clone());
                    if values.len() > MAX_NOMINAL_VALUES {
                        return Err(Error::InvalidDataset(format!(
                            "column `{name}` has more than {MAX_NOMINAL_VALUES} distinct non-numeric values"
                        )));
                    }
                }
            }
            columns.push(FeatureColumn::nominal(name.clone(), values));
        }
    }

    let mut features = Array2::<f64>::zeros((n, d));
    let mut labels = Array2::<u8>::zeros((n, label_count));
    let mut missing_cols = vec![false; d];
    let mut missing_cells = Vec::new();
    for (i, (line, r)) in rows.iter().enumerate() {
        for (j, col) in columns.iter().enumerate() {
            let cell = &r[j];
            if is_missing(cell) {
                missing_cols[j] = true;
                missing_cells.push((i, j));
                continue;
            }
            features[[i, j]] = match &col.kind {
                ColumnKind::Numeric => cell.parse::<f64>().expect("checked numeric"),
                ColumnKind::Nominal(values) => values.iter().position(|v| v == cell).expect("collected") as f64,
            };
        }
        for l in 0..label_count {
            let cell = &r[d + l];
            labels[[i, l]] = match cell.as_str() {
                "0" => 0,
                "1" => 1,
                _ => {
                    return Err(Error::parse(
                        *line,
                        format!("label `{}`: non-binary label value `{cell}`", header[d + l]),
                    ))
                }
            };
        }
    }
    let mut report = ParseReport::default();
    impute_missing(&mut features, &columns, &missing_cols, &missing_cells, &mut report);

    let ds = MultiLabelDataset::new("csv", columns, features, header[d..].to_vec(), labels)?;
    Ok((ds, report))
}

pub fn write_csv(ds: &MultiLabelDataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = ds.columns().iter().map(|c| c.name.as_str()).collect();
    header.extend(ds.label_names().iter().map(String::as_str));
    let to_err = |e: csv::Error| Error::InvalidDataset(format!("csv write: {e}"));
    w.write_record(&header).map_err(to_err)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = Vec::with_capacity(ds.d() + ds.q());
        for (j, c) in ds.columns().iter().enumerate() {
            let v = ds.features()[[i, j]];
            rec.push(match &c.kind {
                ColumnKind::Numeric => format!("{v}"),
                ColumnKind::Nominal(values) => values[v as usize].clone(),
            });
        }
        rec.extend(ds.label_row(i).iter().map(|b| b.to_string()));
        w.write_record(&rec).map_err(to_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidDataset(format!("csv write: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidDataset(e.to_string()))
}
