//! C ABI over the trained text scorer and the series routines.
//!
//! Every fallible function returns an [`MsStatus`]. On failure a message
//! is kept per thread and can be read with [`ms_last_error_message`].
//! Models are opaque handles: create them with [`ms_model_load`] or
//! [`ms_model_from_json`] and release them with [`ms_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mediaseries::classify::{gbv_probability, ClassifyError, ConvTextModel};
use mediaseries::timeseries::{ccf_values, decompose_values, SeriesError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    ShapeMismatch = 5,
    Numeric = 6,
    Panic = 7,
}

/// A loaded classifier.
pub struct MsModel {
    inner: ConvTextModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

struct Failure(MsStatus, String);

impl From<ClassifyError> for Failure {
    fn from(e: ClassifyError) -> Self {
        let status = match e {
            ClassifyError::Io(_) => MsStatus::Io,
            ClassifyError::Format(_) => MsStatus::Parse,
            ClassifyError::ShapeMismatch { .. } | ClassifyError::LengthMismatch(..) | ClassifyError::NotBinaryModel(_) => {
                MsStatus::ShapeMismatch
            }
            _ => MsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<SeriesError> for Failure {
    fn from(e: SeriesError) -> Self {
        let status = match e {
            SeriesError::ZeroVariance(_) | SeriesError::NonFinite(_) | SeriesError::RankDeficient(_) => MsStatus::Numeric,
            _ => MsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            MsStatus::Panic
        }
    }
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(MsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn model<'a>(ptr: *const MsModel) -> Result<&'a ConvTextModel, Failure> {
    ptr.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a
/// successful one. The pointer stays valid until the next call on the
/// same thread.
#[no_mangle]
pub extern "C" fn ms_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Reads a model file written by the `mediaseries` tool.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_model_load(path: *const c_char, out: *mut *mut MsModel) -> MsStatus {
    guard(|| {
        let path = text(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = ConvTextModel::load(Path::new(path))?;
        put(out, Box::into_raw(Box::new(MsModel { inner })), "out")
    })
}

/// Parses a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_model_from_json(json: *const c_char, out: *mut *mut MsModel) -> MsStatus {
    guard(|| {
        let json = text(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = ConvTextModel::from_json(json)?;
        put(out, Box::into_raw(Box::new(MsModel { inner })), "out")
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ms_model_free(model: *mut MsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_model_num_labels(model: *const MsModel, out: *mut usize) -> MsStatus {
    guard(|| put(out, self::model(model)?.num_labels(), "out"))
}

/// Number of token ids every input must have.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_model_sequence_length(model: *const MsModel, out: *mut usize) -> MsStatus {
    guard(|| put(out, self::model(model)?.sequence_length(), "out"))
}

/// Sigmoid output per label for one padded id sequence.
///
/// # Safety
/// `ids` must hold `n_ids` values and `out` room for `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn ms_model_forward(
    model: *const MsModel,
    ids: *const u32,
    n_ids: usize,
    out: *mut f64,
    out_len: usize,
) -> MsStatus {
    guard(|| {
        let m = self::model(model)?;
        let ids = slice(ids, n_ids, "ids")?;
        if out_len != m.num_labels() {
            return Err(Failure(
                MsStatus::ShapeMismatch,
                format!("output holds {out_len} values, model has {} labels", m.num_labels()),
            ));
        }
        let out = slice_mut(out, out_len, "out")?;
        out.copy_from_slice(&m.forward(ids)?);
        Ok(())
    })
}

/// Score of a single-output model for one padded id sequence.
///
/// # Safety
/// `ids` must hold `n_ids` values and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_model_gbv_probability(
    model: *const MsModel,
    ids: *const u32,
    n_ids: usize,
    out: *mut f64,
) -> MsStatus {
    guard(|| {
        let m = self::model(model)?;
        let ids = slice(ids, n_ids, "ids")?;
        put(out, gbv_probability(m, ids)?, "out")
    })
}

/// Moving-average decomposition of `n` evenly spaced values. Each output
/// array holds `n` values; undefined trend and residual entries are NaN.
///
/// # Safety
/// `values` must hold `n` values and each output room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn ms_decompose_ma(
    values: *const f64,
    n: usize,
    period: usize,
    trend: *mut f64,
    seasonal: *mut f64,
    residual: *mut f64,
) -> MsStatus {
    guard(|| {
        let values = slice(values, n, "values")?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Failure(MsStatus::Numeric, format!("values[{i}] is not finite")));
        }
        let (t, s, r) = decompose_values(values, period)?;
        let (trend, seasonal, residual) =
            (slice_mut(trend, n, "trend")?, slice_mut(seasonal, n, "seasonal")?, slice_mut(residual, n, "residual")?);
        for i in 0..n {
            trend[i] = t[i].unwrap_or(f64::NAN);
            seasonal[i] = s[i];
            residual[i] = r[i].unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Cross-correlation of two aligned series for lags `-max_lag..=max_lag`.
/// `correlations` receives `2 * max_lag + 1` values, lowest lag first.
///
/// # Safety
/// `x` and `y` must hold `n` values, `correlations` room for
/// `2 * max_lag + 1` values and `peak_lag` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_ccf(
    x: *const f64,
    y: *const f64,
    n: usize,
    max_lag: usize,
    correlations: *mut f64,
    peak_lag: *mut i64,
) -> MsStatus {
    guard(|| {
        let (x, y) = (slice(x, n, "x")?, slice(y, n, "y")?);
        if peak_lag.is_null() {
            return Err(null("peak_lag"));
        }
        let width = max_lag
            .checked_mul(2)
            .and_then(|w| w.checked_add(1))
            .ok_or_else(|| Failure(MsStatus::InvalidArgument, "max_lag too large".into()))?;
        let result = ccf_values(x, y, max_lag)?;
        slice_mut(correlations, width, "correlations")?.copy_from_slice(&result.correlations);
        put(peak_lag, result.peak_lag, "peak_lag")
    })
}
