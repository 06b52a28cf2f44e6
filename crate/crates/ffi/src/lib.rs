//! C ABI for the DVPP frequency-control simulator.
//!
//! Handles are opaque pointers owned by the library; every constructor has
//! a matching `_free`. All functions return [`DvppStatus`]; on any status
//! other than `Ok`, [`dvpp_last_error_message`] holds a human-readable
//! description for the calling thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dvpp_core::scenario::{compute_metrics, EpsilonSpec, Scenario, Trace, VariantKind};

/// Result code of every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvppStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration failed to parse or validate.
    ConfigError = 3,
    /// The simulation aborted (for example on a non-finite signal).
    RunError = 4,
    /// A file could not be read or written.
    IoError = 5,
    /// An index or buffer size was out of range.
    OutOfRange = 6,
    /// The library panicked; this is a bug worth reporting.
    Panic = 7,
}

/// Numeric trace columns; clamp flags are reported as 0.0 / 1.0.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvppTraceColumn {
    TimeS = 0,
    DeltaFPu = 1,
    PDesWind = 2,
    PDesPv = 3,
    PDesStatcom = 4,
    PConvWind = 5,
    PConvPv = 6,
    PConvStatcom = 7,
    DpPcc = 8,
    DpGrid = 9,
    PLoad = 10,
    ClampWind = 11,
    ClampPv = 12,
    ClampStatcom = 13,
}

/// Scalar metrics of one run. `recovery_s` is meaningful only when
/// `recovered` is true.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DvppMetrics {
    pub rms_matching_error: f64,
    pub nadir_pu: f64,
    pub recovery_s: f64,
    pub recovered: bool,
    pub epsilon_pu: f64,
    pub tracking_rms_wind: f64,
    pub tracking_rms_pv: f64,
    pub tracking_rms_statcom: f64,
}

/// Opaque scenario handle.
pub struct DvppScenario(Scenario);

/// Opaque trace handle.
pub struct DvppTrace(Trace);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: Vec<u8> = msg.bytes().filter(|&b| b != 0).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn status_of(err: &dvpp_core::Error) -> DvppStatus {
    use dvpp_core::Error;
    match err {
        Error::Config(_) => DvppStatus::ConfigError,
        Error::Io(_) => DvppStatus::IoError,
        Error::NonFiniteSignal { .. } => DvppStatus::RunError,
        _ => DvppStatus::ConfigError,
    }
}

fn guarded<F: FnOnce() -> DvppStatus>(f: F) -> DvppStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            DvppStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be a valid NUL-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, DvppStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(DvppStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        DvppStatus::InvalidUtf8
    })
}

/// Last error message of the calling thread. The pointer stays valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dvpp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dvpp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Loads and validates a scenario configuration file (TOML).
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dvpp_scenario_load(
    path: *const c_char,
    out: *mut *mut DvppScenario,
) -> DvppStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DvppStatus::NullPointer;
        }
        let path = match utf8_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match dvpp_core::scenario::config::load_scenario(path) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(DvppScenario(s)));
                DvppStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Parses and validates a scenario configuration from TOML text.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dvpp_scenario_parse(
    text: *const c_char,
    out: *mut *mut DvppScenario,
) -> DvppStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DvppStatus::NullPointer;
        }
        let text = match utf8_arg(text) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match dvpp_core::scenario::config::parse_scenario(text) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(DvppScenario(s)));
                DvppStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Frees a scenario handle. Null is a no-op.
///
/// # Safety
/// `scenario` must have come from a `dvpp_scenario_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn dvpp_scenario_free(scenario: *mut DvppScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

fn run_scenario(scenario: &Scenario, out: *mut *mut DvppTrace) -> DvppStatus {
    match scenario.run() {
        Ok(trace) => {
            unsafe { *out = Box::into_raw(Box::new(DvppTrace(trace))) };
            DvppStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Runs the scenario and returns a trace handle.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dvpp_scenario_run(
    scenario: *const DvppScenario,
    out: *mut *mut DvppTrace,
) -> DvppStatus {
    guarded(|| {
        if scenario.is_null() || out.is_null() {
            set_error("null pointer argument");
            return DvppStatus::NullPointer;
        }
        run_scenario(&(*scenario).0, out)
    })
}

/// Runs the scenario with every unit switched to the given participation
/// kind: "spf", "dpf" or "adpf".
///
/// # Safety
/// `scenario` must be a live handle, `kind` a valid string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dvpp_scenario_run_variant(
    scenario: *const DvppScenario,
    kind: *const c_char,
    out: *mut *mut DvppTrace,
) -> DvppStatus {
    guarded(|| {
        if scenario.is_null() || out.is_null() {
            set_error("null pointer argument");
            return DvppStatus::NullPointer;
        }
        let kind = match utf8_arg(kind) {
            Ok(k) => k,
            Err(s) => return s,
        };
        let kind = match VariantKind::parse(kind) {
            Ok(k) => k,
            Err(e) => {
                set_error(&e.to_string());
                return DvppStatus::ConfigError;
            }
        };
        let variant = (*scenario).0.with_variant(kind);
        run_scenario(&variant, out)
    })
}

/// Frees a trace handle. Null is a no-op.
///
/// # Safety
/// `trace` must have come from a run call.
#[no_mangle]
pub unsafe extern "C" fn dvpp_trace_free(trace: *mut DvppTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of samples in the trace; 0 for a null handle.
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dvpp_trace_len(trace: *const DvppTrace) -> usize {
    if trace.is_null() {
        return 0;
    }
    (*trace).0.len()
}

/// Copies one column into `buf` (up to `cap` values); `written` receives
/// the number of copied samples. Fails with `OutOfRange` when the buffer
/// is smaller than the trace.
///
/// # Safety
/// `trace` must be a live handle; `buf` must point to at least `cap`
/// doubles; `written` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dvpp_trace_column(
    trace: *const DvppTrace,
    column: DvppTraceColumn,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> DvppStatus {
    guarded(|| {
        if trace.is_null() || buf.is_null() || written.is_null() {
            set_error("null pointer argument");
            return DvppStatus::NullPointer;
        }
        let tr = &(*trace).0;
        let n = tr.len();
        if cap < n {
            set_error("buffer too small for trace column");
            return DvppStatus::OutOfRange;
        }
        let out = std::slice::from_raw_parts_mut(buf, n);
        match column {
            DvppTraceColumn::TimeS => out.copy_from_slice(&tr.t),
            DvppTraceColumn::DeltaFPu => out.copy_from_slice(&tr.delta_f),
            DvppTraceColumn::PDesWind => out.copy_from_slice(&tr.p_des[0]),
            DvppTraceColumn::PDesPv => out.copy_from_slice(&tr.p_des[1]),
            DvppTraceColumn::PDesStatcom => out.copy_from_slice(&tr.p_des[2]),
            DvppTraceColumn::PConvWind => out.copy_from_slice(&tr.p_conv[0]),
            DvppTraceColumn::PConvPv => out.copy_from_slice(&tr.p_conv[1]),
            DvppTraceColumn::PConvStatcom => out.copy_from_slice(&tr.p_conv[2]),
            DvppTraceColumn::DpPcc => out.copy_from_slice(&tr.dp_pcc),
            DvppTraceColumn::DpGrid => out.copy_from_slice(&tr.dp_grid),
            DvppTraceColumn::PLoad => out.copy_from_slice(&tr.p_load),
            DvppTraceColumn::ClampWind => fill_bool(out, &tr.clamp[0]),
            DvppTraceColumn::ClampPv => fill_bool(out, &tr.clamp[1]),
            DvppTraceColumn::ClampStatcom => fill_bool(out, &tr.clamp[2]),
        }
        *written = n;
        DvppStatus::Ok
    })
}

fn fill_bool(out: &mut [f64], flags: &[bool]) {
    for (dst, &flag) in out.iter_mut().zip(flags) {
        *dst = if flag { 1.0 } else { 0.0 };
    }
}

/// Writes the trace in the canonical CSV layout.
///
/// # Safety
/// `trace` must be a live handle and `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn dvpp_trace_write_csv(
    trace: *const DvppTrace,
    path: *const c_char,
) -> DvppStatus {
    guarded(|| {
        if trace.is_null() {
            set_error("null trace handle");
            return DvppStatus::NullPointer;
        }
        let path = match utf8_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match (*trace).0.write_csv_file(path) {
            Ok(()) => DvppStatus::Ok,
            Err(e) => {
                set_error(&e.to_string());
                DvppStatus::IoError
            }
        }
    })
}

/// Computes metrics over `[window_start_s, end of trace)` with the default
/// recovery band (10% of the peak deviation).
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dvpp_trace_metrics(
    trace: *const DvppTrace,
    window_start_s: f64,
    out: *mut DvppMetrics,
) -> DvppStatus {
    guarded(|| {
        if trace.is_null() || out.is_null() {
            set_error("null pointer argument");
            return DvppStatus::NullPointer;
        }
        match compute_metrics(&(*trace).0, window_start_s, None, EpsilonSpec::default()) {
            Ok(m) => {
                *out = DvppMetrics {
                    rms_matching_error: m.rms_matching_error,
                    nadir_pu: m.nadir_pu,
                    recovery_s: m.recovery_s.unwrap_or(-1.0),
                    recovered: m.recovery_s.is_some(),
                    epsilon_pu: m.epsilon_pu,
                    tracking_rms_wind: m.tracking_rms[0],
                    tracking_rms_pv: m.tracking_rms[1],
                    tracking_rms_statcom: m.tracking_rms[2],
                };
                DvppStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                DvppStatus::OutOfRange
            }
        }
    })
}
