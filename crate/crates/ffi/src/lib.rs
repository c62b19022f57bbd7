//! C ABI over the cvbmc library.
//!
//! Programs are opaque handles. Every call returns a [`CvbmcStatus`]; on
//! failure `cvbmc_last_error` describes the problem for the calling thread.
//! Strings returned through out-parameters are owned by the caller and must
//! be released with `cvbmc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cvbmc::frontend::{self, normalized_hash, Program, UnwindingMode};
use cvbmc::pipeline::Options;
use cvbmc::solve::registry::{self, SolverConfig, DEFAULT_LIMIT_BITS};

/// Parsed and type-checked MiniC program.
pub struct CvbmcProgram {
    program: Program,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvbmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ConfigError = 4,
    InternalError = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvbmcUnwinding {
    Assume = 0,
    Assert = 1,
}

/// Settings for verification and equivalence checks.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CvbmcOptions {
    /// Loop bound, at least 1.
    pub unwind: u32,
    pub unwinding: CvbmcUnwinding,
    /// Use only the built-in enumerative solver, ignoring any registry.
    pub builtin_only: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CvbmcStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CvbmcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CvbmcStatus::Ok,
        Ok(Err(Failure(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            CvbmcStatus::InternalError
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CvbmcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(CvbmcStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn program<'a>(p: *const CvbmcProgram, what: &str) -> Result<&'a Program, Failure> {
    p.as_ref().map(|h| &h.program).ok_or_else(|| null(what))
}

fn out_string(s: String) -> *mut c_char {
    CString::new(s).expect("json has no nul").into_raw()
}

fn options(o: *const CvbmcOptions) -> Result<Options, Failure> {
    let o = unsafe { o.as_ref() }.copied().unwrap_or(CvbmcOptions { unwind: 8, unwinding: CvbmcUnwinding::Assume, builtin_only: false });
    if o.unwind < 1 {
        return Err(Failure(CvbmcStatus::ConfigError, "unwind must be at least 1".into()));
    }
    let solvers = if o.builtin_only {
        vec![SolverConfig::builtin(DEFAULT_LIMIT_BITS)]
    } else {
        registry::resolve_registry(None).map_err(|e| Failure(CvbmcStatus::ConfigError, e.to_string()))?
    };
    let mut opts = Options::new(o.unwind, solvers);
    opts.mode = match o.unwinding {
        CvbmcUnwinding::Assume => UnwindingMode::Assumption,
        CvbmcUnwinding::Assert => UnwindingMode::Assertion,
    };
    Ok(opts)
}

/// Parse and type-check `source`. On success `*out` owns a new handle.
///
/// # Safety
/// `source` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvbmc_program_parse(source: *const c_char, out: *mut *mut CvbmcProgram) -> CvbmcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let src = text(source, "source")?;
        let program = frontend::parse_and_check(src).map_err(|e| Failure(CvbmcStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(CvbmcProgram { program }));
        Ok(())
    })
}

/// Release a handle from `cvbmc_program_parse`. Null is ignored.
///
/// # Safety
/// `p` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cvbmc_program_free(p: *mut CvbmcProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvbmc_program_function_count(p: *const CvbmcProgram, out: *mut usize) -> CvbmcStatus {
    guard(|| {
        let prog = program(p, "program")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = prog.functions.len();
        Ok(())
    })
}

/// Rename-invariant fingerprint of a function as 64 hex digits.
///
/// # Safety
/// `p` must be a live handle, `name` nul-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cvbmc_function_hash(p: *const CvbmcProgram, name: *const c_char, out: *mut *mut c_char) -> CvbmcStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let prog = program(p, "program")?;
        let name = text(name, "name")?;
        let f = prog.function(name).ok_or_else(|| Failure(CvbmcStatus::ConfigError, format!("no function `{name}`")))?;
        *out = out_string(normalized_hash(f).to_hex());
        Ok(())
    })
}

/// Verify `entry`. Writes the report as JSON and the CLI exit code
/// (0 safe, 10 violation, 20 unknown). `opts` may be null for defaults.
///
/// # Safety
/// Pointers must be valid; `entry` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn cvbmc_verify(
    p: *const CvbmcProgram,
    entry: *const c_char,
    opts: *const CvbmcOptions,
    exit_code: *mut i32,
    report_json: *mut *mut c_char,
) -> CvbmcStatus {
    guard(|| {
        let (code, json) = (exit_code.as_mut().ok_or_else(|| null("exit_code"))?, report_json.as_mut().ok_or_else(|| null("report_json"))?);
        *json = ptr::null_mut();
        let prog = program(p, "program")?;
        let entry = text(entry, "entry")?;
        if prog.function(entry).is_none() {
            return Err(Failure(CvbmcStatus::ConfigError, format!("no function `{entry}`")));
        }
        let o = options(opts)?;
        let r = cvbmc::pipeline::verify(prog, entry, &o).map_err(|e| Failure(CvbmcStatus::ConfigError, e.to_string()))?;
        *code = r.status.exit_code();
        *json = out_string(serde_json::to_string(&r).map_err(|e| Failure(CvbmcStatus::InternalError, e.to_string()))?);
        Ok(())
    })
}

/// Check bounded equivalence of `function` across two programs. Writes
/// the verdict as JSON and the exit code (0 equivalent, 10 not, 20
/// unknown or incomparable).
///
/// # Safety
/// Pointers must be valid; `function` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn cvbmc_equiv(
    old: *const CvbmcProgram,
    new_version: *const CvbmcProgram,
    function: *const c_char,
    opts: *const CvbmcOptions,
    exit_code: *mut i32,
    verdict_json: *mut *mut c_char,
) -> CvbmcStatus {
    guard(|| {
        let (code, json) =
            (exit_code.as_mut().ok_or_else(|| null("exit_code"))?, verdict_json.as_mut().ok_or_else(|| null("verdict_json"))?);
        *json = ptr::null_mut();
        let (po, pn) = (program(old, "old")?, program(new_version, "new_version")?);
        let f = text(function, "function")?;
        let o = options(opts)?;
        let v = cvbmc::equiv::equivalence(po, pn, f, &o).map_err(|e| Failure(CvbmcStatus::ConfigError, e.to_string()))?;
        *code = v.status.exit_code();
        *json = out_string(serde_json::to_string(&v).map_err(|e| Failure(CvbmcStatus::InternalError, e.to_string()))?);
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cvbmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cvbmc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
