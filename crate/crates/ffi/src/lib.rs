//! C ABI over `mlbalance`.
//!
//! Every fallible call returns an [`MlbStatus`]; on failure the message is
//! available from [`mlb_last_error`] on the same thread. Datasets are opaque
//! [`MlbDataset`] handles released with [`mlb_dataset_free`]; strings returned
//! by the library are released with [`mlb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mlbalance::dataset::{parse_csv, parse_mulan, write_arff, write_csv, write_mulan_xml, FeatureColumn};
use mlbalance::imbalance::{global_measures, limb};
use mlbalance::neighbors::build_index;
use mlbalance::sampling::{sample, Method, SamplerConfig};
use mlbalance::{Error, MultiLabelDataset};
use ndarray::Array2;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Data = 4,
    Io = 5,
    Panic = 6,
}

/// Opaque dataset handle.
pub struct MlbDataset {
    inner: MultiLabelDataset,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MlbGlobalMeasures {
    pub mean_ir: f64,
    pub cvir: f64,
    pub mean_imr: f64,
    pub cvimr: f64,
    pub scumble: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MlbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } => MlbStatus::Parse,
            Error::InvalidArgument(_) => MlbStatus::InvalidArgument,
            Error::Io { .. } => MlbStatus::Io,
            _ => MlbStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MlbStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MlbStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording any error or panic for [`mlb_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MlbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            MlbStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn dataset<'a>(p: *const MlbDataset) -> Result<&'a MultiLabelDataset, Failure> {
    p.as_ref().map(|d| &d.inner).ok_or_else(|| null("dataset"))
}

fn read(path: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(MlbStatus::Io, format!("{path}: {e}")))
}

fn write(path: &str, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure(MlbStatus::Io, format!("{path}: {e}")))
}

unsafe fn put_handle(out: *mut *mut MlbDataset, ds: MultiLabelDataset) {
    *out = Box::into_raw(Box::new(MlbDataset { inner: ds }));
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn mlb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mlb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a Mulan dataset (ARFF file plus label XML file).
///
/// # Safety
/// `arff_path` and `xml_path` must be NUL-terminated strings; `out` must be
/// writable. On success `*out` receives a handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn mlb_dataset_load_mulan(
    arff_path: *const c_char,
    xml_path: *const c_char,
    out: *mut *mut MlbDataset,
) -> MlbStatus {
    guard(|| {
        let arff = str_arg(arff_path, "arff_path")?;
        let xml = str_arg(xml_path, "xml_path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = parse_mulan(&read(arff)?, &read(xml)?)?;
        put_handle(out, ds);
        Ok(())
    })
}

/// Loads a CSV dataset whose last `label_count` columns are labels.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlb_dataset_load_csv(
    path: *const c_char,
    label_count: usize,
    out: *mut *mut MlbDataset,
) -> MlbStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = parse_csv(&read(path)?, label_count)?;
        put_handle(out, ds);
        Ok(())
    })
}

/// Builds a dataset from row-major numeric features (`n * d`) and 0/1 labels
/// (`n * q`). Columns are named `x0..`, labels `y0..`.
///
/// # Safety
/// `features` must point to `n * d` doubles and `labels` to `n * q` bytes;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlb_dataset_from_arrays(
    n: usize,
    d: usize,
    q: usize,
    features: *const f64,
    labels: *const u8,
    out: *mut *mut MlbDataset,
) -> MlbStatus {
    guard(|| {
        if features.is_null() && n * d > 0 {
            return Err(null("features"));
        }
        if labels.is_null() && n * q > 0 {
            return Err(null("labels"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let x = if n * d == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(features, n * d).to_vec()
        };
        let y = if n * q == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(labels, n * q).to_vec()
        };
        let x = Array2::from_shape_vec((n, d), x).map_err(|e| invalid(e.to_string()))?;
        let y = Array2::from_shape_vec((n, q), y).map_err(|e| invalid(e.to_string()))?;
        let ds = MultiLabelDataset::new(
            "ffi",
            (0..d).map(|f| FeatureColumn::numeric(format!("x{f}"))).collect(),
            x,
            (0..q).map(|j| format!("y{j}")).collect(),
            y,
        )?;
        put_handle(out, ds);
        Ok(())
    })
}

/// Releases a dataset handle. NULL is ignored.
///
/// # Safety
/// `ds` must be NULL or a handle returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mlb_dataset_free(ds: *mut MlbDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Writes instance, feature and label counts.
///
/// # Safety
/// `ds` must be a live handle; each output pointer must be writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn mlb_dataset_shape(
    ds: *const MlbDataset,
    n: *mut usize,
    d: *mut usize,
    q: *mut usize,
) -> MlbStatus {
    guard(|| {
        let ds = dataset(ds)?;
        for (p, v) in [(n, ds.n()), (d, ds.d()), (q, ds.q())] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies the row-major feature matrix into `buf` (`len` must be `n * d`).
/// Nominal cells hold category indices.
///
/// # Safety
/// `ds` must be a live handle and `buf` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mlb_dataset_features(ds: *const MlbDataset, buf: *mut f64, len: usize) -> MlbStatus {
    guard(|| {
        let ds = dataset(ds)?;
        copy_out(ds.features().iter().copied(), ds.n() * ds.d(), buf, len)
    })
}

/// Copies the row-major 0/1 label matrix into `buf` (`len` must be `n * q`).
///
/// # Safety
/// `ds` must be a live handle and `buf` must have room for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mlb_dataset_labels(ds: *const MlbDataset, buf: *mut u8, len: usize) -> MlbStatus {
    guard(|| {
        let ds = dataset(ds)?;
        copy_out(ds.labels().iter().copied(), ds.n() * ds.q(), buf, len)
    })
}

unsafe fn copy_out<T>(values: impl Iterator<Item = T>, want: usize, buf: *mut T, len: usize) -> Result<(), Failure> {
    if len != want {
        return Err(invalid(format!("buffer holds {len} values, {want} required")));
    }
    if want == 0 {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    let dst = std::slice::from_raw_parts_mut(buf, len);
    for (slot, v) in dst.iter_mut().zip(values) {
        *slot = v;
    }
    Ok(())
}

/// Computes the dataset-level global imbalance measures.
///
/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mlb_global_measures(ds: *const MlbDataset, out: *mut MlbGlobalMeasures) -> MlbStatus {
    guard(|| {
        let ds = dataset(ds)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let g = global_measures(ds)?;
        *out = MlbGlobalMeasures {
            mean_ir: g.mean_ir,
            cvir: g.cvir,
            mean_imr: g.mean_imr,
            cvimr: g.cvimr,
            scumble: g.scumble,
        };
        Ok(())
    })
}

/// Local imbalance (LImb) with `k` neighbors.
///
/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mlb_limb(ds: *const MlbDataset, k: usize, out: *mut f64) -> MlbStatus {
    guard(|| {
        let ds = dataset(ds)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = limb(ds, &build_index(ds, k)?)?;
        Ok(())
    })
}

/// Resamples `ds` with `method` ("mlsol", "mlul", "mlros" or "mlrus").
///
/// # Safety
/// `ds` must be a live handle, `method` a NUL-terminated string and `out`
/// writable. On success `*out` receives a new handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn mlb_sample(
    ds: *const MlbDataset,
    method: *const c_char,
    ratio: f64,
    k: usize,
    seed: u64,
    out: *mut *mut MlbDataset,
) -> MlbStatus {
    guard(|| {
        let ds = dataset(ds)?;
        let method: Method = str_arg(method, "method")?.parse()?;
        if out.is_null() {
            return Err(null("out"));
        }
        let outcome = sample(ds, &SamplerConfig::new(method, ratio, k, seed))?;
        for w in &outcome.warnings {
            log::warn!("{w}");
        }
        put_handle(out, outcome.dataset);
        Ok(())
    })
}

/// Writes `ds` to `path` as "arff" (plus a label XML with the same stem) or "csv".
///
/// # Safety
/// `ds` must be a live handle; `path` and `format` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mlb_dataset_write(
    ds: *const MlbDataset,
    path: *const c_char,
    format: *const c_char,
) -> MlbStatus {
    guard(|| {
        let ds = dataset(ds)?;
        let path = str_arg(path, "path")?;
        match str_arg(format, "format")? {
            "arff" => {
                write(path, &write_arff(ds))?;
                let xml = std::path::Path::new(path).with_extension("xml");
                write(&xml.to_string_lossy(), &write_mulan_xml(ds))
            }
            "csv" => write(path, &write_csv(ds)?),
            other => Err(invalid(format!("unknown format `{other}` (expected arff or csv)"))),
        }
    })
}

/// Global measures plus LImb at `k` as a JSON object. Free the result with
/// [`mlb_string_free`].
///
/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mlb_measure_json(ds: *const MlbDataset, k: usize, out: *mut *mut c_char) -> MlbStatus {
    guard(|| {
        let ds = dataset(ds)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let g = global_measures(ds)?;
        let doc = serde_json::json!({
            "labels": ds.label_names(),
            "per_label": { "irlbl": g.irlbl, "imr": g.imr },
            "mean_ir": g.mean_ir,
            "cvir": g.cvir,
            "mean_imr": g.mean_imr,
            "cvimr": g.cvimr,
            "scumble": g.scumble,
            "limb": limb(ds, &build_index(ds, k)?)?,
            "k": k,
        });
        let text = CString::new(doc.to_string()).map_err(|e| invalid(e.to_string()))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mlb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
