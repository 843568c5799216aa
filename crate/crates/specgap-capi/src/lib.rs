//! C ABI over the run-config layer: build a run from JSON, execute it, read
//! the payload back. All strings are UTF-8 and NUL-terminated; every handle
//! is opaque and must be released with `specgap_run_free`.
//!
//! The committed header lives in `include/specgap.h`; a `cbindgen` CLI on
//! the build host regenerates it, otherwise the committed copy is used.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use specgap::config::{execute, RunConfig};
use specgap::error::Error;

pub const SPECGAP_OK: c_int = 0;
pub const SPECGAP_ERR_CONFIG: c_int = 1;
pub const SPECGAP_ERR_HYPOTHESIS: c_int = 2;
pub const SPECGAP_VERIFY_FAILED: c_int = 3;
pub const SPECGAP_ERR_RUNTIME: c_int = 4;
pub const SPECGAP_ERR_NULL: c_int = 5;
pub const SPECGAP_ERR_PANIC: c_int = 6;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn code_of(err: &Error) -> c_int {
    match err {
        Error::Config(_) | Error::Domain(_) => SPECGAP_ERR_CONFIG,
        Error::Hypothesis(_) => SPECGAP_ERR_HYPOTHESIS,
        _ => SPECGAP_ERR_RUNTIME,
    }
}

/// Opaque run handle.
pub struct SpecgapRun {
    config: RunConfig,
    config_json: CString,
    payload: Option<CString>,
    failures: u64,
}

/// Last error message of the calling thread; empty when no error occurred.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn specgap_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a `RunConfig` JSON document into a new handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn specgap_run_new_from_json(
    json: *const c_char,
    out: *mut *mut SpecgapRun,
) -> c_int {
    if json.is_null() || out.is_null() {
        set_error("null argument");
        return SPECGAP_ERR_NULL;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config JSON is not valid UTF-8");
            return SPECGAP_ERR_CONFIG;
        }
    };
    let config = match RunConfig::from_json(text) {
        Ok(c) => c,
        Err(e) => {
            set_error(&e.to_string());
            return SPECGAP_ERR_CONFIG;
        }
    };
    let config_json = match config.to_json() {
        Ok(j) => CString::new(j).expect("serde_json emits no NUL"),
        Err(e) => {
            set_error(&e.to_string());
            return SPECGAP_ERR_RUNTIME;
        }
    };
    let run = Box::new(SpecgapRun {
        config,
        config_json,
        payload: None,
        failures: 0,
    });
    *out = Box::into_raw(run);
    SPECGAP_OK
}

/// Executes the run; the payload becomes readable on success. Returns
/// `SPECGAP_VERIFY_FAILED` when a verify run produced fail verdicts; the
/// payload is still available in that case.
///
/// # Safety
/// `run` must be a live handle from `specgap_run_new_from_json`.
#[no_mangle]
pub unsafe extern "C" fn specgap_run_execute(run: *mut SpecgapRun) -> c_int {
    let Some(run) = run.as_mut() else {
        set_error("null argument");
        return SPECGAP_ERR_NULL;
    };
    let result = catch_unwind(AssertUnwindSafe(|| execute(&run.config)));
    match result {
        Ok(Ok(out)) => {
            run.failures = out.failures as u64;
            run.payload =
                Some(CString::new(out.payload.replace('\0', " ")).expect("NULs removed"));
            if run.failures > 0 {
                set_error("verification produced fail verdicts");
                SPECGAP_VERIFY_FAILED
            } else {
                SPECGAP_OK
            }
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            code_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            SPECGAP_ERR_PANIC
        }
    }
}

/// Output text of an executed run; NULL before execution. Owned by the
/// handle, valid until the next execute or free.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn specgap_run_payload(run: *const SpecgapRun) -> *const c_char {
    match run.as_ref().and_then(|r| r.payload.as_ref()) {
        Some(p) => p.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Resolved configuration as pretty JSON; re-running it reproduces the
/// payload bit-exactly. Owned by the handle.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn specgap_run_config_json(run: *const SpecgapRun) -> *const c_char {
    match run.as_ref() {
        Some(r) => r.config_json.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Number of fail verdicts of the last verify execution.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn specgap_run_failures(run: *const SpecgapRun) -> u64 {
    run.as_ref().map(|r| r.failures).unwrap_or(0)
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `run` must come from `specgap_run_new_from_json` and not be used after.
#[no_mangle]
pub unsafe extern "C" fn specgap_run_free(run: *mut SpecgapRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    unsafe fn new_run(json: &str) -> (c_int, *mut SpecgapRun) {
        let c = CString::new(json).unwrap();
        let mut handle: *mut SpecgapRun = std::ptr::null_mut();
        let code = specgap_run_new_from_json(c.as_ptr(), &mut handle);
        (code, handle)
    }

    #[test]
    fn bounds_round_trip() {
        unsafe {
            let (code, run) = new_run(r#"{"command":"bounds"}"#);
            assert_eq!(code, SPECGAP_OK);
            assert!(specgap_run_payload(run).is_null());
            assert_eq!(specgap_run_execute(run), SPECGAP_OK);
            let payload = CStr::from_ptr(specgap_run_payload(run))
                .to_str()
                .unwrap()
                .to_owned();
            assert!(payload.contains("\"s_bo_lower\""));

            // the emitted config reproduces the payload bit-exactly
            let config = CStr::from_ptr(specgap_run_config_json(run)).to_str().unwrap();
            let (code, again) = new_run(config);
            assert_eq!(code, SPECGAP_OK);
            assert_eq!(specgap_run_execute(again), SPECGAP_OK);
            let payload2 = CStr::from_ptr(specgap_run_payload(again)).to_str().unwrap();
            assert_eq!(payload, payload2);
            specgap_run_free(again);
            specgap_run_free(run);
        }
    }

    #[test]
    fn error_paths() {
        unsafe {
            let (code, _) = new_run("not json");
            assert_eq!(code, SPECGAP_ERR_CONFIG);
            assert!(!CStr::from_ptr(specgap_last_error()).to_bytes().is_empty());

            let mut out: *mut SpecgapRun = std::ptr::null_mut();
            assert_eq!(
                specgap_run_new_from_json(std::ptr::null(), &mut out),
                SPECGAP_ERR_NULL
            );

            let (code, run) = new_run(
                r#"{"command":"bounds","phi":{"type":"constant","value":0.0}}"#,
            );
            assert_eq!(code, SPECGAP_OK);
            assert_eq!(specgap_run_execute(run), SPECGAP_ERR_HYPOTHESIS);
            specgap_run_free(run);

            let (code, run) = new_run(r#"{"command":"gap","truncation":1}"#);
            assert_eq!(code, SPECGAP_OK);
            assert_eq!(specgap_run_execute(run), SPECGAP_ERR_CONFIG);
            specgap_run_free(run);

            specgap_run_free(std::ptr::null_mut());
        }
    }

    #[test]
    fn grazing_payload_is_csv() {
        unsafe {
            let (code, run) = new_run(
                r#"{"command":"grazing","eps_list":[0.4,0.2],"velocity_order":6}"#,
            );
            assert_eq!(code, SPECGAP_OK);
            assert_eq!(specgap_run_execute(run), SPECGAP_OK);
            let payload = CStr::from_ptr(specgap_run_payload(run)).to_str().unwrap();
            assert!(payload.starts_with("eps,d_boltzmann,c_times_d_landau,rel_error\n"));
            assert_eq!(specgap_run_failures(run), 0);
            specgap_run_free(run);
        }
    }
}
