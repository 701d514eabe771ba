use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use ptchron::session::write_log;
use ptchron::synth::{synth_corpus, SynthConfig};
use ptchron_ffi::*;

fn corpus_csv(n: usize, events: usize) -> Vec<u8> {
    let sessions = synth_corpus(3, n, &SynthConfig { target_events: events, ..SynthConfig::default() });
    let mut buf = Vec::new();
    write_log(&sessions, &mut buf).unwrap();
    buf
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ptc_last_error_message()) }.to_string_lossy().into_owned()
}

fn take(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { ptc_string_free(s) };
    out
}

#[test]
fn analyze_round_trip() {
    let csv = corpus_csv(3, 120);
    let grammar = CString::new("mini").unwrap();
    let cfg = PtcConfig { min_events: 0, ..ptc_config_default() };
    let mut h = ptr::null_mut();
    let st = unsafe { ptc_analysis_from_csv(csv.as_ptr(), csv.len(), grammar.as_ptr(), &cfg, &mut h) };
    assert_eq!(st, PtcStatus::Ok, "{}", last_error());
    assert!(!h.is_null());
    let n = unsafe { ptc_analysis_session_count(h) };
    assert!(n > 0);

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ptc_analysis_session_report_json(h, 0, &mut s) }, PtcStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
    assert_eq!(report["session"], "s000__main.py");

    assert_eq!(unsafe { ptc_analysis_summary_json(h, &mut s) }, PtcStatus::Ok);
    let summary: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
    assert_eq!(summary["ingested"], 3);
    assert!(summary.get("generated_at_unix").is_none());

    assert_eq!(unsafe { ptc_analysis_session_report_json(h, n, &mut s) }, PtcStatus::OutOfRange);
    assert!(last_error().contains("session"));
    unsafe { ptc_analysis_free(h) };
}

#[test]
fn defaults_filter_short_sessions() {
    let csv = corpus_csv(2, 50);
    let grammar = CString::new("mini").unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { ptc_analysis_from_csv(csv.as_ptr(), csv.len(), grammar.as_ptr(), ptr::null(), &mut h) };
    assert_eq!(st, PtcStatus::Ok);
    assert_eq!(unsafe { ptc_analysis_session_count(h) }, 0);
    unsafe { ptc_analysis_free(h) };
}

#[test]
fn errors_map_to_codes() {
    let grammar = CString::new("mini").unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { ptc_analysis_from_csv(ptr::null(), 0, grammar.as_ptr(), ptr::null(), &mut h) };
    assert_eq!(st, PtcStatus::NullPointer);

    let bad = [0xffu8, 0xfe];
    let st = unsafe { ptc_analysis_from_csv(bad.as_ptr(), bad.len(), grammar.as_ptr(), ptr::null(), &mut h) };
    assert_eq!(st, PtcStatus::InvalidUtf8);

    let csv = corpus_csv(1, 30);
    let cfg = PtcConfig { min_tree_coverage: 1.5, ..ptc_config_default() };
    let st = unsafe { ptc_analysis_from_csv(csv.as_ptr(), csv.len(), grammar.as_ptr(), &cfg, &mut h) };
    assert_eq!(st, PtcStatus::ConfigError);
    assert!(h.is_null());

    let cobol = CString::new("cobol").unwrap();
    let st = unsafe { ptc_analysis_from_csv(csv.as_ptr(), csv.len(), cobol.as_ptr(), ptr::null(), &mut h) };
    assert_eq!(st, PtcStatus::ConfigError);
    assert!(!last_error().is_empty());

    let junk = b"EventID,Order\n1,2\n";
    let st = unsafe { ptc_analysis_from_csv(junk.as_ptr(), junk.len(), grammar.as_ptr(), ptr::null(), &mut h) };
    assert_eq!(st, PtcStatus::IngestError);

    assert_eq!(unsafe { ptc_analysis_session_count(ptr::null()) }, 0);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ptc_analysis_summary_json(ptr::null(), &mut s) }, PtcStatus::NullPointer);
    unsafe {
        ptc_analysis_free(ptr::null_mut());
        ptc_string_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ptchron.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["ptc_analysis_from_csv", "ptc_analysis_free", "ptc_string_free", "PTC_STATUS_OUT_OF_RANGE"] {
        assert!(text.contains(f), "{f}");
    }
    let Ok(o) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(&header).output() else {
        eprintln!("cc not found, skipping");
        return;
    };
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
