//! C ABI over `regret_lab`.
//!
//! Every fallible entry point returns an [`RlStatus`]; on failure the message
//! is kept per thread and readable through [`rl_last_error`]. Handles are
//! opaque and must be released with their matching `_free` function.

use regret_lab::env::{format_levels, parse_levels, EnvKind, Level};
use regret_lab::levelgen::{generate, GenClass, GeneratorSpec};
use regret_lab::rng::Seed;
use regret_lab::solvers::{classify, max_return, Class};
use regret_lab::theory::{run_suites, GameOptions, Suite};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    OutOfRange = 4,
    Capacity = 5,
    NoConvergence = 6,
    Internal = 7,
}

/// Level classes as reported by [`rl_levels_classify`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlClass {
    NonDistinguishing = 0,
    Distinguishing = 1,
    Unclassified = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlEnv {
    Corner = 0,
    Dish = 1,
    Keys = 2,
}

/// An owned, immutable list of levels.
pub struct RlLevelSet {
    levels: Vec<Level>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &regret_lab::Error) -> RlStatus {
    use regret_lab::Error as E;
    match e {
        E::Parse { .. } | E::Version(_) => RlStatus::Parse,
        E::Capacity { .. } => RlStatus::Capacity,
        E::NoConvergence { .. } => RlStatus::NoConvergence,
        E::Shape { .. } => RlStatus::OutOfRange,
        E::Io(_) => RlStatus::Internal,
        _ => RlStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RlStatus, String)>) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RlStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            RlStatus::Internal
        }
    }
}

fn lib<T>(r: regret_lab::Result<T>) -> Result<T, (RlStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (RlStatus, String) {
    (RlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (RlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn level_at<'a>(set: *const RlLevelSet, index: usize) -> Result<&'a Level, (RlStatus, String)> {
    let set = set.as_ref().ok_or_else(|| null("set"))?;
    set.levels
        .get(index)
        .ok_or_else(|| (RlStatus::OutOfRange, format!("index {index} out of range ({} levels)", set.levels.len())))
}

fn into_c_string(s: String) -> Result<*mut c_char, (RlStatus, String)> {
    CString::new(s).map(CString::into_raw).map_err(|_| (RlStatus::Internal, "interior NUL".into()))
}

/// Message for the most recent failure on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Sample `count` levels of one class. `seed` fixes the output exactly.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rl_levels_generate(
    env: RlEnv,
    distinguishing: bool,
    count: usize,
    seed: u64,
    out: *mut *mut RlLevelSet,
) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = GeneratorSpec {
            env: match env {
                RlEnv::Corner => EnvKind::Corner,
                RlEnv::Dish => EnvKind::Dish,
                RlEnv::Keys => EnvKind::Keys,
            },
            class: if distinguishing { GenClass::Distinguishing } else { GenClass::NonDistinguishing },
            ..GeneratorSpec::default()
        };
        let seed = Seed(seed);
        let levels = lib((0..count as u64).map(|i| generate(&spec, seed.index(i))).collect())?;
        *out = Box::into_raw(Box::new(RlLevelSet { levels }));
        Ok(())
    })
}

/// Parse a level file.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_levels_parse(text: *const c_char, out: *mut *mut RlLevelSet) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let levels = lib(parse_levels(str_arg(text, "text")?))?;
        *out = Box::into_raw(Box::new(RlLevelSet { levels }));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_levels_free(set: *mut RlLevelSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of levels, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rl_levels_len(set: *const RlLevelSet) -> usize {
    set.as_ref().map_or(0, |s| s.levels.len())
}

/// Serialize the set in the level file format. Free the result with [`rl_string_free`].
///
/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_levels_format(set: *const RlLevelSet, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        let set = set.as_ref().ok_or_else(|| null("set"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = into_c_string(format_levels(&set.levels))?;
        Ok(())
    })
}

/// Exact maximum discounted true-goal return of one level.
///
/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_levels_max_return(set: *const RlLevelSet, index: usize, gamma: f64, out: *mut f64) -> RlStatus {
    guard(|| {
        let level = level_at(set, index)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err((RlStatus::InvalidArgument, format!("gamma {gamma} outside (0, 1]")));
        }
        *out = max_return(level, gamma);
        Ok(())
    })
}

/// Classify one level as distinguishing or not.
///
/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_levels_classify(set: *const RlLevelSet, index: usize, out: *mut RlClass) -> RlStatus {
    guard(|| {
        let level = level_at(set, index)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match classify(level).class {
            Class::NonDistinguishing => RlClass::NonDistinguishing,
            Class::Distinguishing => RlClass::Distinguishing,
            Class::Unclassified => RlClass::Unclassified,
        };
        Ok(())
    })
}

/// Run theory suites and return the JSON report. `suites` is a comma list or
/// `"all"`. `passed` is set to whether every instance passed.
///
/// # Safety
/// `suites` must be NUL-terminated; `out` and `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_theory_report(
    suites: *const c_char,
    instances: usize,
    seed: u64,
    out: *mut *mut c_char,
    passed: *mut bool,
) -> RlStatus {
    guard(|| {
        if out.is_null() || passed.is_null() {
            return Err(null("out"));
        }
        let list = lib(Suite::parse_list(str_arg(suites, "suites")?))?;
        let report = lib(run_suites(&list, instances, Seed(seed), &GameOptions::default()))?;
        let json = lib(report.to_json())?;
        *passed = report.ok();
        *out = into_c_string(json)?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
