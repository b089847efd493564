//! C interface to the planning engine.
//!
//! Instances and plans are opaque handles created and destroyed through this
//! API. Every fallible call returns an [`ReStatus`]; on failure the message
//! is available from [`re_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use robust_expansion::ccg::{run_ccg, CcgConfig, CcgResult};
use robust_expansion::grid::{self, NetworkInstance};
use robust_expansion::report::SolutionDocument;
use robust_expansion::solver::DenseSimplex;
use robust_expansion::uncertainty::UncertaintyBudget;
use robust_expansion::Error;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Unreadable, malformed or invalid input data or arguments.
    InputError = 3,
    /// The LP/MILP backend failed.
    SolverError = 4,
    EnumerationCap = 5,
    Internal = 6,
    Panic = 7,
}

/// Opaque network instance.
pub struct ReInstance {
    inner: NetworkInstance,
}

/// Opaque result of one robust planning run.
pub struct RePlan {
    instance: NetworkInstance,
    result: CcgResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> ReStatus {
    match e.root() {
        Error::EnumerationCap { .. } => ReStatus::EnumerationCap,
        Error::Solver(_) => ReStatus::SolverError,
        _ if e.is_input_error() => ReStatus::InputError,
        _ => ReStatus::Internal,
    }
}

fn fail(e: Error) -> ReStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

/// Runs `f`, turning a panic into [`ReStatus::Panic`].
fn guard(f: impl FnOnce() -> ReStatus) -> ReStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside the planning engine");
            ReStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, ReStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(ReStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        ReStatus::InvalidUtf8
    })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn re_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn re_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates an instance (JSON or CSV bundle manifest).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn re_instance_load(path: *const c_char, out: *mut *mut ReInstance) -> ReStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return ReStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match grid::load_instance(Path::new(path)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(ReInstance { inner }));
                ReStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses and validates an instance from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn re_instance_from_json(json: *const c_char, out: *mut *mut ReInstance) -> ReStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return ReStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match grid::load_instance_json(text, Path::new("<json>")) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(ReInstance { inner }));
                ReStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `inst` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn re_instance_free(inst: *mut ReInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of validation violations (0 for a loaded instance).
///
/// # Safety
/// `inst` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn re_instance_violation_count(inst: *const ReInstance) -> usize {
    inst.as_ref().map_or(0, |i| grid::validate(&i.inner).len())
}

/// # Safety
/// `inst` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn re_instance_region_count(inst: *const ReInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.regions.len())
}

/// # Safety
/// `inst` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn re_instance_step_count(inst: *const ReInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.steps())
}

/// Runs column-and-constraint generation. `tolerance <= 0` and
/// `max_iterations == 0` select the defaults (1e-8 and 50). A run that stops
/// without converging still returns `Ok` and a plan; check
/// [`re_plan_converged`].
///
/// # Safety
/// `inst` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn re_plan_run(
    inst: *const ReInstance,
    gamma_pv: usize,
    gamma_wind: usize,
    tolerance: f64,
    max_iterations: usize,
    out: *mut *mut RePlan,
) -> ReStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return ReStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let Some(inst) = inst.as_ref() else {
            set_error("null instance");
            return ReStatus::NullArgument;
        };
        let mut config = CcgConfig::default();
        if tolerance > 0.0 {
            config.tolerance = tolerance;
        }
        if max_iterations > 0 {
            config.max_iterations = max_iterations;
        }
        let budget = UncertaintyBudget::new(gamma_pv, gamma_wind);
        match run_ccg(&inst.inner, &budget, &config, &DenseSimplex::default()) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(RePlan {
                    instance: inst.inner.clone(),
                    result,
                }));
                ReStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `plan` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn re_plan_free(plan: *mut RePlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Total annualized cost of the plan; NaN for a null handle.
///
/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn re_plan_objective(plan: *const RePlan) -> f64 {
    plan.as_ref().map_or(f64::NAN, |p| p.result.solution.objective)
}

/// Final lower bound, upper bound and relative gap. Any output pointer may
/// be NULL.
///
/// # Safety
/// `plan` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn re_plan_bounds(plan: *const RePlan, lower: *mut f64, upper: *mut f64, gap: *mut f64) -> ReStatus {
    let Some(p) = plan.as_ref() else {
        set_error("null plan");
        return ReStatus::NullArgument;
    };
    let t = &p.result.trace;
    if let Some(l) = lower.as_mut() {
        *l = t.lower_bound();
    }
    if let Some(u) = upper.as_mut() {
        *u = t.upper_bound();
    }
    if let Some(g) = gap.as_mut() {
        *g = t.gap();
    }
    ReStatus::Ok
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn re_plan_iterations(plan: *const RePlan) -> usize {
    plan.as_ref().map_or(0, |p| p.result.trace.iterations.len())
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn re_plan_converged(plan: *const RePlan) -> bool {
    plan.as_ref().is_some_and(|p| p.result.trace.converged)
}

/// The solution document as JSON. Free with [`re_string_free`]; NULL on
/// failure.
///
/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn re_plan_solution_json(plan: *const RePlan) -> *mut c_char {
    let Some(p) = plan.as_ref() else {
        set_error("null plan");
        return ptr::null_mut();
    };
    let doc = SolutionDocument::new(&p.instance, &p.result);
    match serde_json::to_string(&doc) {
        Ok(s) => into_c_string(s),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn re_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Annualized cost per MW: `overnight * CRF(rate, lifetime) + fixed_om`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn re_annualize_cost(
    overnight: f64,
    lifetime: f64,
    rate: f64,
    fixed_om: f64,
    out: *mut f64,
) -> ReStatus {
    let Some(out) = out.as_mut() else {
        set_error("null output pointer");
        return ReStatus::NullArgument;
    };
    match grid::annualize_cost(overnight, lifetime, rate, fixed_om) {
        Ok(v) => {
            *out = v;
            ReStatus::Ok
        }
        Err(e) => fail(e),
    }
}
