//! Mulan format: an ARFF file plus an XML file naming the label attributes.
//!
//! Supported ARFF subset: `numeric`/`real`/`integer` and nominal attributes,
//! dense and sparse data rows, `%` comment lines, `?` for missing values.
//! String, date and relational attributes are rejected.

use std::collections::{HashMap, HashSet};

use ndarray::Array2;

use super::{ColumnKind, FeatureColumn, MultiLabelDataset, ParseReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum AttrType {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone)]
struct Attribute {
    name: String,
    ty: AttrType,
    line: usize,
}

/// One raw data cell before typing: `None` is `?`.
type RawRow = (usize, Vec<Option<String>>);

pub fn parse_mulan(arff_text: &str, xml_text: &str) -> Result<MultiLabelDataset> {
    parse_mulan_with_report(arff_text, xml_text).map(|(ds, _)| ds)
}

pub fn parse_mulan_with_report(arff_text: &str, xml_text: &str) -> Result<(MultiLabelDataset, ParseReport)> {
    let label_names = parse_label_xml(xml_text)?;
    let (relation, attrs, rows) = parse_arff(arff_text)?;

    let mut by_name: HashMap<&str, usize> = HashMap::new();
    for (idx, a) in attrs.iter().enumerate() {
        if by_name.insert(a.name.as_str(), idx).is_some() {
            return Err(Error::parse(a.line, format!("duplicate attribute name `{}`", a.name)));
        }
    }
    let mut seen_labels = HashSet::new();
    let mut label_attr = Vec::with_capacity(label_names.len());
    for name in &label_names {
        if !seen_labels.insert(name.as_str()) {
            return Err(Error::label(name, "listed twice in the label XML"));
        }
        let &idx = by_name
            .get(name.as_str())
            .ok_or_else(|| Error::label(name, "listed in the label XML but missing from the ARFF header"))?;
        match &attrs[idx].ty {
            AttrType::Nominal(values) if is_binary_domain(values) => {}
            _ => return Err(Error::label(name, "label attribute must be nominal over {0,1}")),
        }
        label_attr.push(idx);
    }
    let label_set: HashSet<usize> = label_attr.iter().copied().collect();
    let feature_attr: Vec<usize> = (0..attrs.len()).filter(|i| !label_set.contains(i)).collect();
    if feature_attr.is_empty() {
        return Err(Error::InvalidDataset("ARFF declares no feature attributes".into()));
    }
    if rows.is_empty() {
        return Err(Error::InvalidDataset("ARFF has no data rows (n = 0)".into()));
    }

    let n = rows.len();
    let d = feature_attr.len();
    let q = label_attr.len();
    let mut features = Array2::<f64>::zeros((n, d));
    let mut labels = Array2::<u8>::zeros((n, q));
    let mut report = ParseReport::default();
    let mut missing_cols: Vec<bool> = vec![false; d];
    let mut missing_cells: Vec<(usize, usize)> = Vec::new();

    for (i, (line, cells)) in rows.iter().enumerate() {
        for (fj, &aj) in feature_attr.iter().enumerate() {
            let attr = &attrs[aj];
            match &cells[aj] {
                None => {
                    missing_cols[fj] = true;
                    missing_cells.push((i, fj));
                }
                Some(text) => {
                    features[[i, fj]] = match &attr.ty {
                        AttrType::Numeric => text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                            Error::parse(*line, format!("attribute `{}`: `{text}` is not a number", attr.name))
                        })?,
                        AttrType::Nominal(values) => values.iter().position(|v| v == text).ok_or_else(|| {
                            Error::parse(
                                *line,
                                format!("attribute `{}`: `{text}` is not a declared value", attr.name),
                            )
                        })? as f64,
                    };
                }
            }
        }
        for (lj, &aj) in label_attr.iter().enumerate() {
            let name = &attrs[aj].name;
            labels[[i, lj]] = match cells[aj].as_deref() {
                Some("0") => 0,
                Some("1") => 1,
                Some(other) => {
                    return Err(Error::parse(
                        *line,
                        format!("label `{name}`: value `{other}` is not 0 or 1"),
                    ))
                }
                None => return Err(Error::parse(*line, format!("label `{name}`: missing label value"))),
            };
        }
    }

    let columns: Vec<FeatureColumn> = feature_attr
        .iter()
        .map(|&aj| {
            let a = &attrs[aj];
            FeatureColumn {
                name: a.name.clone(),
                kind: match &a.ty {
                    AttrType::Numeric => ColumnKind::Numeric,
                    AttrType::Nominal(v) => ColumnKind::Nominal(v.clone()),
                },
            }
        })
        .collect();

    impute_missing(&mut features, &columns, &missing_cols, &missing_cells, &mut report);

    let ds = MultiLabelDataset::new(relation, columns, features, label_names, labels)?;
    Ok((ds, report))
}

/// Missing numeric cells become 0; missing nominal cells take the most
/// frequent observed category (lowest index on ties).
pub(crate) fn impute_missing(
    features: &mut Array2<f64>,
    columns: &[FeatureColumn],
    missing_cols: &[bool],
    missing_cells: &[(usize, usize)],
    report: &mut ParseReport,
) {
    if missing_cells.is_empty() {
        return;
    }
    let missing: HashSet<(usize, usize)> = missing_cells.iter().copied().collect();
    let mut fill = vec![0.0; columns.len()];
    for (j, c) in columns.iter().enumerate() {
        if !missing_cols[j] {
            continue;
        }
        report.columns_with_missing.push(c.name.clone());
        if let ColumnKind::Nominal(values) = &c.kind {
            let mut counts = vec![0usize; values.len()];
            for i in 0..features.nrows() {
                if !missing.contains(&(i, j)) {
                    counts[features[[i, j]] as usize] += 1;
                }
            }
            let best = counts
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(k, _)| k)
                .unwrap_or(0);
            fill[j] = best as f64;
        }
    }
    for &(i, j) in missing_cells {
        features[[i, j]] = fill[j];
        if columns[j].is_numeric() {
            report.imputed_numeric += 1;
        } else {
            report.imputed_nominal += 1;
        }
    }
}

fn is_binary_domain(values: &[String]) -> bool {
    values.len() == 2 && values.iter().any(|v| v == "0") && values.iter().any(|v| v == "1")
}

fn parse_label_xml(xml_text: &str) -> Result<Vec<String>> {
    let doc = roxmltree::Document::parse(xml_text)
        .map_err(|e| Error::parse(e.pos().row as usize, format!("label XML: {e}")))?;
    let names: Vec<String> = doc
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "label")
        .map(|n| {
            n.attribute("name").map(str::to_string).ok_or_else(|| {
                let pos = doc.text_pos_at(n.range().start);
                Error::parse(pos.row as usize, "label XML: <label> element without a name attribute")
            })
        })
        .collect::<Result<_>>()?;
    if names.is_empty() {
        return Err(Error::InvalidDataset("label XML lists no labels".into()));
    }
    Ok(names)
}

fn parse_arff(text: &str) -> Result<(String, Vec<Attribute>, Vec<RawRow>)> {
    let mut relation = String::new();
    let mut attrs: Vec<Attribute> = Vec::new();
    let mut rows: Vec<RawRow> = Vec::new();
    let mut in_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            let (keyword, rest) = split_keyword(line);
            match keyword.to_ascii_lowercase().as_str() {
                "@relation" => {
                    let (name, _) = take_token(rest, line_no)?;
                    relation = name;
                }
                "@attribute" => attrs.push(parse_attribute(rest, line_no)?),
                "@data" => {
                    if attrs.is_empty() {
                        return Err(Error::parse(line_no, "@data before any @attribute"));
                    }
                    in_data = true;
                }
                _ => return Err(Error::parse(line_no, format!("unexpected header line `{line}`"))),
            }
            continue;
        }
        let cells = if line.starts_with('{') {
            parse_sparse_row(line, &attrs, line_no)?
        } else {
            let values = split_values(line, line_no)?;
            if values.len() != attrs.len() {
                return Err(Error::parse(
                    line_no,
                    format!("expected {} values, found {}", attrs.len(), values.len()),
                ));
            }
            values.into_iter().map(missing_to_none).collect()
        };
        rows.push((line_no, cells));
    }
    if !in_data {
        return Err(Error::parse(text.lines().count().max(1), "missing @data section"));
    }
    Ok((relation, attrs, rows))
}

fn missing_to_none(v: Token) -> Option<String> {
    if !v.quoted && v.text == "?" {
        None
    } else {
        Some(v.text)
    }
}

fn split_keyword(line: &str) -> (&str, &str) {
    match line.find(char::is_whitespace) {
        Some(p) => (&line[..p], line[p..].trim_start()),
        None => (line, ""),
    }
}

fn parse_attribute(rest: &str, line_no: usize) -> Result<Attribute> {
    let (name, after) = take_token(rest, line_no)?;
    let after = after.trim();
    if after.is_empty() {
        return Err(Error::parse(line_no, format!("attribute `{name}` has no type")));
    }
    let ty = if let Some(body) = after.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| Error::parse(line_no, format!("attribute `{name}`: unterminated value list")))?;
        let values: Vec<String> = split_values(body, line_no)?.into_iter().map(|t| t.text).collect();
        if values.is_empty() || (values.len() == 1 && values[0].is_empty()) {
            return Err(Error::parse(
                line_no,
                format!("attribute `{name}`: empty nominal value list"),
            ));
        }
        let distinct: HashSet<&String> = values.iter().collect();
        if distinct.len() != values.len() {
            return Err(Error::parse(
                line_no,
                format!("attribute `{name}`: duplicate nominal value"),
            ));
        }
        AttrType::Nominal(values)
    } else {
        let ty_word = after.split_whitespace().next().unwrap_or("").to_ascii_lowercase();
        match ty_word.as_str() {
            "numeric" | "real" | "integer" => AttrType::Numeric,
            "string" | "date" | "relational" => {
                return Err(Error::parse(
                    line_no,
                    format!("attribute `{name}`: unsupported attribute type `{ty_word}`"),
                ))
            }
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("attribute `{name}`: unknown type `{other}`"),
                ))
            }
        }
    };
    Ok(Attribute {
        name,
        ty,
        line: line_no,
    })
}

fn parse_sparse_row(line: &str, attrs: &[Attribute], line_no: usize) -> Result<Vec<Option<String>>> {
    let body = line
        .strip_prefix('{')
        .and_then(|s| s.trim_end().strip_suffix('}'))
        .ok_or_else(|| Error::parse(line_no, "unterminated sparse row"))?;
    // Unlisted cells take value index 0: numeric 0, nominal first declared value.
    let mut cells: Vec<Option<String>> = attrs
        .iter()
        .map(|a| match &a.ty {
            AttrType::Numeric => Some("0".to_string()),
            AttrType::Nominal(values) => Some(values[0].clone()),
        })
        .collect();
    if body.trim().is_empty() {
        return Ok(cells);
    }
    let mut last: Option<usize> = None;
    for entry in split_raw(body, line_no)? {
        let (idx_str, value_str) = split_keyword(entry);
        let idx: usize = idx_str
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad sparse index `{idx_str}`")))?;
        if idx >= attrs.len() {
            return Err(Error::parse(line_no, format!("sparse index {idx} out of range")));
        }
        if last.is_some_and(|l| idx <= l) {
            return Err(Error::parse(line_no, "sparse indices must be strictly increasing"));
        }
        last = Some(idx);
        let (value, rest) = take_token(value_str, line_no)?;
        if !rest.trim().is_empty() {
            return Err(Error::parse(
                line_no,
                format!("trailing text after sparse value `{value}`"),
            ));
        }
        let quoted = value_str.trim_start().starts_with(['\'', '"']);
        cells[idx] = if !quoted && value == "?" { None } else { Some(value) };
    }
    Ok(cells)
}

#[derive(Debug)]
struct Token {
    text: String,
    quoted: bool,
}

/// Reads one possibly-quoted token; returns it unescaped plus the remainder.
fn take_token(s: &str, line_no: usize) -> Result<(String, &str)> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    match chars.next() {
        None => Err(Error::parse(line_no, "expected a name")),
        Some((_, q @ ('\'' | '"'))) => {
            let mut out = String::new();
            let mut escaped = false;
            for (pos, c) in chars {
                if escaped {
                    out.push(c);
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    return Ok((out, &s[pos + c.len_utf8()..]));
                } else {
                    out.push(c);
                }
            }
            Err(Error::parse(line_no, "unterminated quoted string"))
        }
        Some(_) => {
            let end = s.find(|c: char| c.is_whitespace() || c == '{').unwrap_or(s.len());
            Ok((s[..end].to_string(), &s[end..]))
        }
    }
}

/// Splits on commas outside quotes, keeping each piece's raw (trimmed) text.
fn split_raw(s: &str, line_no: usize) -> Result<Vec<&str>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (pos, c) in s.char_indices() {
        match quote {
            Some(q) => {
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                }
            }
            None => match c {
                '\'' | '"' => quote = Some(c),
                ',' => {
                    out.push(s[start..pos].trim());
                    start = pos + 1;
                }
                _ => {}
            },
        }
    }
    if quote.is_some() {
        return Err(Error::parse(line_no, "unterminated quoted value"));
    }
    out.push(s[start..].trim());
    Ok(out)
}

/// Comma-separated values with single/double quote support.
fn split_values(s: &str, line_no: usize) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut quoted = false;
    let mut escaped = false;
    for c in s.chars() {
        if let Some(q) = quote {
            if escaped {
                cur.push(c);
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            } else {
                cur.push(c);
            }
            continue;
        }
        match c {
            '\'' | '"' if cur.trim().is_empty() => {
                cur.clear();
                quote = Some(c);
                quoted = true;
            }
            ',' => {
                out.push(Token {
                    text: finish(&cur, quoted),
                    quoted,
                });
                cur.clear();
                quoted = false;
            }
            _ => cur.push(c),
        }
    }
    if quote.is_some() {
        return Err(Error::parse(line_no, "unterminated quoted value"));
    }
    out.push(Token {
        text: finish(&cur, quoted),
        quoted,
    });
    Ok(out)
}

fn finish(cur: &str, quoted: bool) -> String {
    if quoted {
        cur.to_string()
    } else {
        cur.trim().to_string()
    }
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s == "?"
        || s.chars()
            .any(|c| c.is_whitespace() || matches!(c, ',' | '\'' | '"' | '{' | '}' | '%' | '\\'))
}

fn quote(s: &str) -> String {
    if needs_quotes(s) {
        let escaped = s.replace('\\', "\\\\").replace('\'', "\\'");
        format!("'{escaped}'")
    } else {
        s.to_string()
    }
}

/// Dense ARFF with features first, then the label attributes over `{0,1}`.
pub fn write_arff(ds: &MultiLabelDataset) -> String {
    let mut out = String::new();
    let relation = if ds.relation().is_empty() {
        "dataset"
    } else {
        ds.relation()
    };
    out.push_str(&format!("@relation {}\n\n", quote(relation)));
    for c in ds.columns() {
        match &c.kind {
            ColumnKind::Numeric => out.push_str(&format!("@attribute {} numeric\n", quote(&c.name))),
            ColumnKind::Nominal(values) => {
                let list: Vec<String> = values.iter().map(|v| quote(v)).collect();
                out.push_str(&format!("@attribute {} {{{}}}\n", quote(&c.name), list.join(",")));
            }
        }
    }
    for l in ds.label_names() {
        out.push_str(&format!("@attribute {} {{0,1}}\n", quote(l)));
    }
    out.push_str("\n@data\n");
    for i in 0..ds.n() {
        let mut cells: Vec<String> = Vec::with_capacity(ds.d() + ds.q());
        for (j, c) in ds.columns().iter().enumerate() {
            let v = ds.features()[[i, j]];
            cells.push(match &c.kind {
                ColumnKind::Numeric => format!("{v}"),
                ColumnKind::Nominal(values) => quote(&values[v as usize]),
            });
        }
        cells.extend(ds.label_row(i).iter().map(|b| b.to_string()));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn write_mulan_xml(ds: &MultiLabelDataset) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<labels xmlns=\"http://mulan.sourceforge.net/labels\">\n",
    );
    for l in ds.label_names() {
        out.push_str(&format!("<label name=\"{}\"></label>\n", xml_escape(l)));
    }
    out.push_str("</labels>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const XML: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<labels xmlns="http://mulan.sourceforge.net/labels">
<label name="l1"></label>
<label name="l2"></label>
</labels>"#;

    const HEADER: &str = "@relation toy\n@attribute f1 numeric\n@attribute l1 {0,1}\n@attribute l2 {0,1}\n@data\n";

    #[test]
    fn dense_row() {
        let ds = parse_mulan(&format!("{HEADER}0.5,1,0\n"), XML).unwrap();
        assert_eq!((ds.n(), ds.d(), ds.q()), (1, 1, 2));
        assert_eq!(ds.features()[[0, 0]], 0.5);
        assert_eq!(ds.label_row(0).to_vec(), vec![1, 0]);
    }

    #[test]
    fn sparse_row_defaults_to_zero() {
        let ds = parse_mulan(&format!("{HEADER}{{1 1}}\n"), XML).unwrap();
        assert_eq!(ds.features()[[0, 0]], 0.0);
        assert_eq!(ds.label_row(0).to_vec(), vec![1, 0]);
    }

    #[test]
    fn labels_follow_xml_order_and_features_arff_order() {
        let arff = "% comment\n@RELATION 'r x'\n@ATTRIBUTE l2 {0,1}\n@attribute a REAL\n@attribute 'b c' {x,'y z'}\n@attribute l1 {1,0}\n@DATA\n1,2.5,'y z',0\n% mid\n0,?,?,1\n0,1,x,1\n";
        let (ds, report) = parse_mulan_with_report(arff, XML).unwrap();
        assert_eq!(ds.relation(), "r x");
        assert_eq!(ds.label_names(), &["l1".to_string(), "l2".to_string()]);
        assert_eq!(ds.columns()[0].name, "a");
        assert_eq!(ds.columns()[1].name, "b c");
        assert_eq!(ds.label_row(0).to_vec(), vec![0, 1]);
        assert_eq!(ds.label_row(1).to_vec(), vec![1, 0]);
        assert_eq!(ds.features()[[0, 1]], 1.0);
        // missing numeric -> 0, missing nominal -> most frequent (tie -> lowest index)
        assert_eq!(ds.features()[[1, 0]], 0.0);
        assert_eq!(ds.features()[[1, 1]], 0.0);
        assert_eq!(report.imputed_numeric, 1);
        assert_eq!(report.imputed_nominal, 1);
        assert_eq!(report.columns_with_missing, vec!["a".to_string(), "b c".to_string()]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_mulan(&format!("{HEADER}0.5,1\n"), XML).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 6, .. }), "{err}");
        let err = parse_mulan(&format!("{HEADER}abc,1,0\n"), XML).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 6, .. }), "{err}");
        let err = parse_mulan(&format!("{HEADER}1,2,0\n"), XML).unwrap_err();
        assert!(err.to_string().contains("l1"), "{err}");
    }

    #[test]
    fn schema_errors() {
        let xml_missing = XML.replace("l2", "l9");
        let err = parse_mulan(&format!("{HEADER}0.5,1,0\n"), &xml_missing).unwrap_err();
        assert!(err.to_string().contains("l9"));

        let numeric_label =
            "@relation t\n@attribute f numeric\n@attribute l1 numeric\n@attribute l2 {0,1}\n@data\n1,1,0\n";
        assert!(matches!(parse_mulan(numeric_label, XML), Err(Error::Label { .. })));

        let dup = "@relation t\n@attribute f numeric\n@attribute f numeric\n@attribute l1 {0,1}\n@attribute l2 {0,1}\n@data\n1,1,1,0\n";
        assert!(matches!(parse_mulan(dup, XML), Err(Error::Parse { line: 3, .. })));

        let date = "@relation t\n@attribute f date\n@attribute l1 {0,1}\n@attribute l2 {0,1}\n@data\n";
        let err = parse_mulan(date, XML).unwrap_err();
        assert!(err.to_string().contains("unsupported"));

        let empty = HEADER.to_string();
        assert!(matches!(parse_mulan(&empty, XML), Err(Error::InvalidDataset(_))));

        let missing_label = format!("{HEADER}1,?,0\n");
        assert!(parse_mulan(&missing_label, XML).is_err());
    }

    #[test]
    fn writer_round_trips() {
        let arff = "@relation 'my rel'\n@attribute a numeric\n@attribute 'b,c' {'x y',z}\n@attribute l1 {0,1}\n@attribute l2 {0,1}\n@data\n0.1,z,1,0\n-3e-7,'x y',0,1\n{0 2.5, 3 1}\n";
        let ds = parse_mulan(arff, XML).unwrap();
        let back = parse_mulan(&write_arff(&ds), &write_mulan_xml(&ds)).unwrap();
        assert_eq!(ds, back);
        for (a, b) in ds.features().iter().zip(back.features().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
