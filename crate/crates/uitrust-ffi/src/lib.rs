//! C ABI for running simulation scenarios from other languages.
//!
//! Scenarios are parsed from the same TOML text the CLI accepts and run to
//! a metrics report; reports are read back as JSON strings. All handles
//! are opaque and must be released with the matching `_free` function.
//! Status codes mirror the CLI exit codes.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use uitrust_sim::harness::{run_scenario, HarnessError, MetricsReport, ScenarioConfig};
use uitrust_sim::sim::TraceSink;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UtStatus {
    Ok = 0,
    /// A required pointer argument was null or not valid UTF-8.
    InvalidArgument = 1,
    ConfigError = 2,
    TopologyError = 3,
    IoError = 4,
}

fn status_of(err: &HarnessError) -> UtStatus {
    match err.exit_code() {
        2 => UtStatus::ConfigError,
        3 => UtStatus::TopologyError,
        _ => UtStatus::IoError,
    }
}

/// Opaque parsed scenario.
pub struct UtScenario {
    cfg: ScenarioConfig,
}

/// Opaque finished-run report.
pub struct UtReport {
    metrics: MetricsReport,
    trust_json: Option<String>,
}

/// Parses scenario TOML into an opaque handle.
///
/// On success writes the handle through `out` and returns `Ok`; on failure
/// `out` is untouched. The handle must be freed with `ut_scenario_free`.
///
/// # Safety
/// `toml_text` must point to a NUL-terminated string and `out` to writable
/// memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ut_scenario_parse(
    toml_text: *const c_char,
    out: *mut *mut UtScenario,
) -> UtStatus {
    if toml_text.is_null() || out.is_null() {
        return UtStatus::InvalidArgument;
    }
    let Ok(text) = CStr::from_ptr(toml_text).to_str() else {
        return UtStatus::InvalidArgument;
    };
    match ScenarioConfig::from_toml_str(text) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(UtScenario { cfg }));
            UtStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Overrides the seed of a parsed scenario.
///
/// # Safety
/// `scenario` must be a live handle from `ut_scenario_parse`.
#[no_mangle]
pub unsafe extern "C" fn ut_scenario_set_seed(scenario: *mut UtScenario, seed: u64) -> UtStatus {
    let Some(s) = scenario.as_mut() else {
        return UtStatus::InvalidArgument;
    };
    s.cfg.seed = seed;
    UtStatus::Ok
}

/// Runs the scenario to completion and hands back a report handle.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ut_run(scenario: *const UtScenario, out: *mut *mut UtReport) -> UtStatus {
    let Some(s) = scenario.as_ref() else {
        return UtStatus::InvalidArgument;
    };
    if out.is_null() {
        return UtStatus::InvalidArgument;
    }
    match run_scenario(&s.cfg, TraceSink::Null) {
        Ok(run) => {
            let trust_json = run
                .final_report
                .as_ref()
                .map(|r| serde_json::to_string(r).expect("report serializes"));
            *out = Box::into_raw(Box::new(UtReport {
                metrics: run.metrics,
                trust_json,
            }));
            UtStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Returns the metrics report as a JSON string owned by the caller; free
/// it with `ut_string_free`.
///
/// # Safety
/// `report` must be a live handle and `out` writable for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ut_report_metrics_json(
    report: *const UtReport,
    out: *mut *mut c_char,
) -> UtStatus {
    let Some(r) = report.as_ref() else {
        return UtStatus::InvalidArgument;
    };
    if out.is_null() {
        return UtStatus::InvalidArgument;
    }
    let json = serde_json::to_string(&r.metrics).expect("metrics serialize");
    *out = CString::new(json).expect("no interior NUL").into_raw();
    UtStatus::Ok
}

/// Returns the final trust report as JSON, or a null pointer when the run
/// produced none (non-uitrust defenses or no alarm).
///
/// # Safety
/// `report` must be a live handle and `out` writable for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ut_report_trust_json(
    report: *const UtReport,
    out: *mut *mut c_char,
) -> UtStatus {
    let Some(r) = report.as_ref() else {
        return UtStatus::InvalidArgument;
    };
    if out.is_null() {
        return UtStatus::InvalidArgument;
    }
    *out = match &r.trust_json {
        Some(json) => CString::new(json.clone()).expect("no interior NUL").into_raw(),
        None => ptr::null_mut(),
    };
    UtStatus::Ok
}

/// # Safety
/// `scenario` must be null or a handle from `ut_scenario_parse`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ut_scenario_free(scenario: *mut UtScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `report` must be null or a handle from `ut_run`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ut_report_free(report: *mut UtReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ut_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn parse(toml: &str) -> *mut UtScenario {
        let text = CString::new(toml).unwrap();
        let mut handle: *mut UtScenario = ptr::null_mut();
        let status = unsafe { ut_scenario_parse(text.as_ptr(), &mut handle) };
        assert_eq!(status, UtStatus::Ok);
        handle
    }

    #[test]
    fn parse_run_and_read_back() {
        let scenario = parse(
            "node_count = 24\nsybil_ratio = 0.25\nduration_s = 400.0\nattack_start_s = 120.0\ndefense = \"uitrust\"\n",
        );
        unsafe {
            assert_eq!(ut_scenario_set_seed(scenario, 3), UtStatus::Ok);
            let mut report: *mut UtReport = ptr::null_mut();
            assert_eq!(ut_run(scenario, &mut report), UtStatus::Ok);
            let mut json: *mut c_char = ptr::null_mut();
            assert_eq!(ut_report_metrics_json(report, &mut json), UtStatus::Ok);
            let text = CStr::from_ptr(json).to_str().unwrap();
            assert!(text.contains("\"seed\":3"));
            assert!(text.contains("\"defense\":\"uitrust\""));
            ut_string_free(json);
            ut_report_free(report);
            ut_scenario_free(scenario);
        }
    }

    #[test]
    fn bad_config_maps_to_config_status() {
        let text = CString::new("nonsense_key = true").unwrap();
        let mut handle: *mut UtScenario = ptr::null_mut();
        let status = unsafe { ut_scenario_parse(text.as_ptr(), &mut handle) };
        assert_eq!(status, UtStatus::ConfigError);
        assert!(handle.is_null());
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            assert_eq!(
                ut_scenario_parse(ptr::null(), ptr::null_mut()),
                UtStatus::InvalidArgument
            );
            assert_eq!(ut_scenario_set_seed(ptr::null_mut(), 1), UtStatus::InvalidArgument);
            let mut out: *mut UtReport = ptr::null_mut();
            assert_eq!(ut_run(ptr::null(), &mut out), UtStatus::InvalidArgument);
            ut_scenario_free(ptr::null_mut());
            ut_report_free(ptr::null_mut());
            ut_string_free(ptr::null_mut());
        }
    }
}
