//! C interface to the `lambda-eit` simulator.
//!
//! Objects are opaque handles created and released by this library. Every
//! fallible function returns an [`LeStatus`]; on failure the message is
//! available from [`le_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lambda_eit::cli_io::{compute_metrics, emit_figure_data, metrics_json, RunConfig};
use lambda_eit::model::{FieldPair, SimParams};
use lambda_eit::propagate::{integrate_with, Discard, IntegrateOptions, Scheme, SimulationRecord};
use lambda_eit::scenarios::{preset, PulseSpec};
use lambda_eit::Error;

/// Result of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeStatus {
    Ok = 0,
    /// A diagnostic could not be computed.
    Diagnostic = 1,
    /// Invalid configuration, preset name or parameter.
    Config = 2,
    /// The solver stopped on a numerical instability.
    Instability = 3,
    Io = 4,
    NullArgument = 5,
    InvalidUtf8 = 6,
    /// Output buffer too small; the required length was written.
    BufferTooSmall = 7,
    Panic = 8,
}

/// A resolved run: medium, pulse program and grid.
pub struct LeConfig {
    name: String,
    params: SimParams,
    spec: PulseSpec,
    scheme: Scheme,
}

/// The sampled result of a run.
pub struct LeRecord {
    name: String,
    record: SimulationRecord,
}

/// One row of a boundary or exit series.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeFieldSample {
    pub tau: f64,
    pub omega_p_re: f64,
    pub omega_p_im: f64,
    pub omega_c_re: f64,
    pub omega_c_im: f64,
}

/// Which series to copy out of a record.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeSeries {
    Boundary = 0,
    Exit = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> LeStatus {
    match e.exit_code() {
        2 => LeStatus::Config,
        3 => LeStatus::Instability,
        4 => LeStatus::Io,
        _ => LeStatus::Diagnostic,
    }
}

fn fail(e: Error) -> LeStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn guard(f: impl FnOnce() -> LeStatus) -> LeStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            LeStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, LeStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(LeStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        LeStatus::InvalidUtf8
    })
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(concat!("null argument `", stringify!($p), "`"));
            return LeStatus::NullArgument;
        })+
    };
}

macro_rules! try_le {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from this thread.
#[no_mangle]
pub extern "C" fn le_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn le_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}

/// Configuration of a named preset.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn le_config_from_preset(name: *const c_char, out: *mut *mut LeConfig) -> LeStatus {
    guard(|| {
        non_null!(out);
        let name = try_le!(text(name));
        match preset(name) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(LeConfig {
                    name: p.name,
                    params: p.params,
                    spec: p.spec,
                    scheme: Scheme::default(),
                }));
                LeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Configuration from the text of a run configuration file.
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn le_config_from_text(config_text: *const c_char, out: *mut *mut LeConfig) -> LeStatus {
    guard(|| {
        non_null!(out);
        let body = try_le!(text(config_text));
        match RunConfig::parse(body, "<config>").and_then(|c| c.resolve()) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(LeConfig {
                    name: r.name,
                    params: r.params,
                    spec: r.spec,
                    scheme: r.scheme,
                }));
                LeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Grid size of a configuration: cells along the cell and time samples.
///
/// # Safety
/// `config` must come from this library; `n_xi` and `n_tau` may be null.
#[no_mangle]
pub unsafe extern "C" fn le_config_grid(config: *const LeConfig, n_xi: *mut usize, n_tau: *mut usize) -> LeStatus {
    guard(|| {
        non_null!(config);
        let c = &*config;
        if !n_xi.is_null() {
            *n_xi = c.params.n_xi;
        }
        if !n_tau.is_null() {
            *n_tau = c.params.n_tau;
        }
        LeStatus::Ok
    })
}

/// Releases a configuration; null is ignored.
///
/// # Safety
/// `config` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn le_config_free(config: *mut LeConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs a configuration. On an instability the partial record is still
/// returned through `out` together with [`LeStatus::Instability`].
///
/// # Safety
/// `config` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn le_run(config: *const LeConfig, out: *mut *mut LeRecord) -> LeStatus {
    guard(|| {
        non_null!(config, out);
        *out = ptr::null_mut();
        let c = &*config;
        let options = IntegrateOptions {
            scheme: c.scheme,
            keep_snapshots: true,
        };
        let wrap = |record| Box::into_raw(Box::new(LeRecord {
            name: c.name.clone(),
            record,
        }));
        match integrate_with(&c.spec, &c.params, options, &mut Discard) {
            Ok(r) => {
                *out = wrap(r);
                LeStatus::Ok
            }
            Err(Error::Instability {
                xi,
                tau,
                reason,
                partial,
            }) => {
                if let Some(p) = partial {
                    *out = wrap(*p);
                }
                fail(Error::Instability {
                    xi,
                    tau,
                    reason,
                    partial: None,
                })
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of time samples in a record.
///
/// # Safety
/// `record` must come from this library or be null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn le_record_len(record: *const LeRecord) -> usize {
    if record.is_null() {
        return 0;
    }
    (*record).record.taus.len()
}

/// Copies a series into `buffer`. `written` receives the number of samples;
/// when `capacity` is too small it receives the required length instead.
///
/// # Safety
/// `buffer` must hold `capacity` samples (it may be null when `capacity`
/// is 0); `record` and `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn le_record_series(
    record: *const LeRecord,
    which: LeSeries,
    buffer: *mut LeFieldSample,
    capacity: usize,
    written: *mut usize,
) -> LeStatus {
    guard(|| {
        non_null!(record, written);
        let r = &(*record).record;
        let series: &[FieldPair] = match which {
            LeSeries::Boundary => &r.boundary_series,
            LeSeries::Exit => &r.exit_series,
        };
        *written = series.len();
        if capacity < series.len() {
            set_error(format!("buffer holds {capacity} samples, {} needed", series.len()));
            return LeStatus::BufferTooSmall;
        }
        non_null!(buffer);
        let out = std::slice::from_raw_parts_mut(buffer, capacity);
        for ((slot, t), f) in out.iter_mut().zip(&r.taus).zip(series) {
            *slot = LeFieldSample {
                tau: *t,
                omega_p_re: f.omega_p.re,
                omega_p_im: f.omega_p.im,
                omega_c_re: f.omega_c.re,
                omega_c_im: f.omega_c.im,
            };
        }
        LeStatus::Ok
    })
}

/// Metrics of a record as a JSON document; release with
/// [`le_string_free`].
///
/// # Safety
/// `record` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn le_record_metrics_json(record: *const LeRecord, out: *mut *mut c_char) -> LeStatus {
    guard(|| {
        non_null!(record, out);
        let r = &*record;
        let json = metrics_json(&compute_metrics(&r.record, &r.name));
        match CString::new(json) {
            Ok(s) => {
                *out = s.into_raw();
                LeStatus::Ok
            }
            Err(_) => fail(Error::diagnostic("metrics contain a NUL byte")),
        }
    })
}

/// Writes the figure tables `figure_id` (e.g. "fig3") into `dir`.
///
/// # Safety
/// `record` must come from this library; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn le_record_emit_figure(
    record: *const LeRecord,
    figure_id: *const c_char,
    dir: *const c_char,
) -> LeStatus {
    guard(|| {
        non_null!(record);
        let id = try_le!(text(figure_id));
        let dir = try_le!(text(dir));
        match emit_figure_data(&(*record).record, id, Path::new(dir)) {
            Ok(_) => LeStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Releases a record; null is ignored.
///
/// # Safety
/// `record` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn le_record_free(record: *mut LeRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn le_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
