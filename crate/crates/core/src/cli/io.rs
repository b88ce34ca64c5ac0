use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::dataset::{
    parse_csv_with_report, parse_mulan_with_report, write_arff, write_csv, write_mulan_xml, MultiLabelDataset,
    ParseReport,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Arff,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "arff" | "mulan" => Ok(Format::Arff),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::InvalidArgument(format!(
                "--format: unknown format `{s}` (expected arff or csv)"
            ))),
        }
    }

    pub fn detect(path: &Path, hint: Option<&str>) -> Result<Self> {
        if let Some(h) = hint {
            return Format::parse(h);
        }
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") => Ok(Format::Csv),
            _ => Ok(Format::Arff),
        }
    }
}

/// A dataset together with how it was read.
pub struct Loaded {
    pub dataset: MultiLabelDataset,
    pub report: ParseReport,
    pub format: Format,
    pub sha256: String,
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// XML file next to an ARFF file (same stem).
pub fn sibling_xml(path: &Path) -> PathBuf {
    path.with_extension("xml")
}

pub fn load(path: &Path, xml: Option<&Path>, labels: Option<usize>, hint: Option<&str>) -> Result<Loaded> {
    let format = Format::detect(path, hint)?;
    let text = read_text(path)?;
    let sha256 = sha256_hex(text.as_bytes());
    let with_path = |e: Error| match e {
        Error::Parse { line, msg } => Error::InvalidDataset(format!("{}:{line}: {msg}", path.display())),
        Error::Label { label, msg } => Error::InvalidDataset(format!("{}: label `{label}`: {msg}", path.display())),
        Error::InvalidDataset(m) => Error::InvalidDataset(format!("{}: {m}", path.display())),
        other => other,
    };
    let (dataset, report) = match format {
        Format::Arff => {
            let xml_path = xml.map(Path::to_path_buf).unwrap_or_else(|| sibling_xml(path));
            let xml_text = read_text(&xml_path)?;
            parse_mulan_with_report(&text, &xml_text).map_err(with_path)?
        }
        Format::Csv => {
            let q = labels.ok_or_else(|| {
                Error::InvalidArgument(format!("--labels is required to read CSV input {}", path.display()))
            })?;
            parse_csv_with_report(&text, q).map_err(with_path)?
        }
    };
    if !report.is_clean() {
        log::warn!(
            "{}: imputed {} numeric and {} nominal missing cells",
            path.display(),
            report.imputed_numeric,
            report.imputed_nominal
        );
    }
    Ok(Loaded {
        dataset,
        report,
        format,
        sha256,
    })
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Writes to `path` atomically, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// Saves a dataset in `format`; ARFF output also writes the label XML next to it.
pub fn save_dataset(ds: &MultiLabelDataset, path: &Path, format: Format) -> Result<Vec<PathBuf>> {
    match format {
        Format::Arff => {
            let xml = sibling_xml(path);
            write_atomic(path, write_arff(ds).as_bytes())?;
            write_atomic(&xml, write_mulan_xml(ds).as_bytes())?;
            Ok(vec![path.to_path_buf(), xml])
        }
        Format::Csv => {
            write_atomic(path, write_csv(ds)?.as_bytes())?;
            Ok(vec![path.to_path_buf()])
        }
    }
}

pub fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}
