//! C ABI over the corpus analysis. Handles are opaque; every call returns a
//! [`PtcStatus`] and leaves a message for [`ptc_last_error_message`] on
//! failure. Strings returned through out-pointers belong to the caller and
//! must be released with [`ptc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ptchron::report::{analyze_corpus, AnalysisConfig, CorpusResult};
use ptchron::{ingest_log, ReportError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    IngestError = 3,
    ConfigError = 4,
    OutOfRange = 5,
    Internal = 6,
}

/// Analysis thresholds. Start from [`ptc_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PtcConfig {
    pub min_events: u32,
    pub min_tree_coverage: f64,
    pub jump_threshold: u32,
    pub rename_gap: u32,
    pub size_split: u32,
}

/// Results for one log. Opaque to C.
pub struct PtcAnalysis {
    config: AnalysisConfig,
    result: CorpusResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: PtcStatus, msg: impl Into<String>) -> PtcStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PtcStatus) -> PtcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PtcStatus::Internal, "internal panic"),
    }
}

fn status_of(e: &ReportError) -> PtcStatus {
    match e {
        ReportError::Config(_) | ReportError::Grammar(_) | ReportError::UnknownPlotKind(_) => PtcStatus::ConfigError,
        ReportError::Ingest(_) | ReportError::NoSessions => PtcStatus::IngestError,
        _ => PtcStatus::Internal,
    }
}

fn hand_out(s: String, out: *mut *mut c_char) -> PtcStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            PtcStatus::Ok
        }
        Err(_) => fail(PtcStatus::Internal, "output contains a NUL byte"),
    }
}

#[no_mangle]
pub extern "C" fn ptc_config_default() -> PtcConfig {
    let d = AnalysisConfig::default();
    PtcConfig {
        min_events: d.min_events as u32,
        min_tree_coverage: d.min_tree_coverage,
        jump_threshold: d.jump_threshold as u32,
        rename_gap: d.rename_gap as u32,
        size_split: d.size_split as u32,
    }
}

/// Ingests a CSV log held in `data[0..len)` and analyzes every session.
/// `grammar` is a NUL-terminated name such as "mini"; `config` may be null
/// for the defaults. On success `*out` owns a new handle.
///
/// # Safety
/// `data` must point to `len` readable bytes, `grammar` to a NUL-terminated
/// string, `config` to a valid config or null, and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ptc_analysis_from_csv(
    data: *const u8,
    len: usize,
    grammar: *const c_char,
    config: *const PtcConfig,
    out: *mut *mut PtcAnalysis,
) -> PtcStatus {
    guard(|| {
        if data.is_null() || grammar.is_null() || out.is_null() {
            return fail(PtcStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let bytes = std::slice::from_raw_parts(data, len);
        let Ok(text) = std::str::from_utf8(bytes) else {
            return fail(PtcStatus::InvalidUtf8, "log is not valid UTF-8");
        };
        let Ok(grammar) = CStr::from_ptr(grammar).to_str() else {
            return fail(PtcStatus::InvalidUtf8, "grammar name is not valid UTF-8");
        };
        let c = if config.is_null() { ptc_config_default() } else { *config };
        let config = AnalysisConfig {
            grammar: grammar.to_string(),
            min_events: c.min_events as usize,
            min_tree_coverage: c.min_tree_coverage,
            jump_threshold: c.jump_threshold as usize,
            rename_gap: c.rename_gap as usize,
            size_split: c.size_split as usize,
        };
        if let Err(e) = config.validate() {
            return fail(status_of(&e), e.to_string());
        }
        let sessions = match ingest_log(text.as_bytes()) {
            Ok(s) => s,
            Err(e) => return fail(PtcStatus::IngestError, e.to_string()),
        };
        match analyze_corpus(sessions, &config) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(PtcAnalysis { config, result }));
                PtcStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Number of sessions that passed the filters; 0 for a null handle.
///
/// # Safety
/// `analysis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ptc_analysis_session_count(analysis: *const PtcAnalysis) -> usize {
    analysis.as_ref().map_or(0, |a| a.result.kept.len())
}

/// JSON report of kept session `index` (sessions are ordered by key).
///
/// # Safety
/// `analysis` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ptc_analysis_session_report_json(
    analysis: *const PtcAnalysis,
    index: usize,
    out: *mut *mut c_char,
) -> PtcStatus {
    guard(|| {
        let (Some(a), false) = (analysis.as_ref(), out.is_null()) else {
            return fail(PtcStatus::NullPointer, "null argument");
        };
        let Some(r) = a.result.kept.get(index) else {
            return fail(
                PtcStatus::OutOfRange,
                format!("session {index} of {}", a.result.kept.len()),
            );
        };
        match serde_json::to_string(&r.report) {
            Ok(s) => hand_out(s, out),
            Err(e) => fail(PtcStatus::Internal, e.to_string()),
        }
    })
}

/// Corpus summary as JSON, without a timestamp.
///
/// # Safety
/// `analysis` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ptc_analysis_summary_json(analysis: *const PtcAnalysis, out: *mut *mut c_char) -> PtcStatus {
    guard(|| {
        let (Some(a), false) = (analysis.as_ref(), out.is_null()) else {
            return fail(PtcStatus::NullPointer, "null argument");
        };
        match serde_json::to_string(&a.result.summary(&a.config, None)) {
            Ok(s) => hand_out(s, out),
            Err(e) => fail(PtcStatus::Internal, e.to_string()),
        }
    })
}

/// # Safety
/// `analysis` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ptc_analysis_free(analysis: *mut PtcAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn ptc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ptc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
