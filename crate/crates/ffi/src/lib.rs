//! C ABI for the lsms toolkit.
//!
//! Instances and solutions are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! an [`LsmsStatus`]; on failure [`lsms_last_error`] describes the problem.
//! Strings returned through out-parameters must be released with
//! [`lsms_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lsms::generator::{build_instance, GeneratorConfig, Horizon, Level};
use lsms::model::check_feasibility_with;
use lsms::{two_phase, Error, FlowMode, HeuristicConfig, HeuristicTrace, Instance, Solution};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsmsStatus {
    Ok = 0,
    NullPointer = 1,
    ParseError = 2,
    InvalidInput = 3,
    Infeasible = 4,
    SolverFailure = 5,
    Internal = 6,
}

/// Opaque problem instance.
pub struct LsmsInstance {
    inner: Instance,
}

/// Opaque heuristic result: the returned plan plus its cycle trace.
pub struct LsmsSolution {
    solution: Solution,
    trace: HeuristicTrace,
    flow_mode: FlowMode,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: LsmsStatus, msg: impl Into<String>) -> LsmsStatus {
    set_last_error(msg);
    status
}

fn status_of(err: &Error) -> LsmsStatus {
    match err {
        Error::Parse(_) => LsmsStatus::ParseError,
        Error::Input(_) => LsmsStatus::InvalidInput,
        Error::Infeasible { .. } => LsmsStatus::Infeasible,
        Error::Solver(_) => LsmsStatus::SolverFailure,
        Error::Contract(_) | Error::Io(_) | Error::Csv(_) => LsmsStatus::Internal,
    }
}

/// Run `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (LsmsStatus, String)>) -> LsmsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LsmsStatus::Ok
        }
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(LsmsStatus::Internal, "panic inside lsms"),
    }
}

fn lib_err(err: Error) -> (LsmsStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (LsmsStatus, String) {
    (LsmsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (LsmsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            LsmsStatus::InvalidInput,
            format!("{what} is not valid UTF-8"),
        )
    })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn level(code: u32) -> Result<Level, (LsmsStatus, String)> {
    Level::ALL.get(code as usize).copied().ok_or_else(|| {
        (
            LsmsStatus::InvalidInput,
            format!("level code {code} is not 0, 1 or 2"),
        )
    })
}

/// Message for the most recent failed call on this thread, or null. Valid
/// until the next lsms call on the same thread.
#[no_mangle]
pub extern "C" fn lsms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parse and validate an instance from a NUL-terminated JSON string.
///
/// # Safety
/// `json` must be null or a valid C string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lsms_instance_from_json(
    json: *const c_char,
    out: *mut *mut LsmsInstance,
) -> LsmsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        let inner = Instance::from_json_str(text).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LsmsInstance { inner }));
        Ok(())
    })
}

/// Generate a plant instance. `horizon` is 10, 20 or 30; levels are
/// 0 = low, 1 = medium, 2 = high.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lsms_instance_generate(
    horizon: u32,
    capacity_level: u32,
    inventory_level: u32,
    seed: u64,
    out: *mut *mut LsmsInstance,
) -> LsmsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let h: Horizon = horizon.to_string().parse().map_err(|_| {
            (
                LsmsStatus::InvalidInput,
                format!("horizon {horizon} is not 10, 20 or 30"),
            )
        })?;
        let cfg = GeneratorConfig::new(h, level(capacity_level)?, level(inventory_level)?, seed);
        let inner = build_instance(&cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LsmsInstance { inner }));
        Ok(())
    })
}

/// # Safety
/// `inst` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lsms_instance_free(inst: *mut LsmsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Serialize an instance to JSON.
///
/// # Safety
/// `inst` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lsms_instance_to_json(
    inst: *const LsmsInstance,
    out: *mut *mut c_char,
) -> LsmsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = into_c_string(inst.inner.to_json_string());
        Ok(())
    })
}

/// Run the two-phase heuristic. `strict_flow` enforces flow equality in
/// every period.
///
/// # Safety
/// `inst` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lsms_solve(
    inst: *const LsmsInstance,
    eps: f64,
    max_iter: u32,
    strict_flow: bool,
    out: *mut *mut LsmsSolution,
) -> LsmsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let flow_mode = if strict_flow {
            FlowMode::PerPeriod
        } else {
            FlowMode::Aggregate
        };
        let config = HeuristicConfig {
            eps,
            max_iter: max_iter as usize,
            v_init: None,
            flow_mode,
        };
        let (solution, trace) = two_phase(&inst.inner, &config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LsmsSolution {
            solution,
            trace,
            flow_mode,
        }));
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lsms_solution_free(sol: *mut LsmsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lsms_solution_objective(
    sol: *const LsmsSolution,
    out: *mut f64,
) -> LsmsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sol.solution.objective;
        Ok(())
    })
}

/// Number of heuristic cycles performed.
///
/// # Safety
/// `sol` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lsms_solution_cycles(
    sol: *const LsmsSolution,
    out: *mut u32,
) -> LsmsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sol.trace.cycle_count() as u32;
        Ok(())
    })
}

/// Processing time of zero-based machine `m` in zero-based period `t`.
///
/// # Safety
/// `sol` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lsms_solution_proc_time(
    sol: *const LsmsSolution,
    m: u32,
    t: u32,
    out: *mut f64,
) -> LsmsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = *sol
            .solution
            .proc_time
            .get(m as usize)
            .and_then(|row| row.get(t as usize))
            .ok_or_else(|| {
                (
                    LsmsStatus::InvalidInput,
                    format!("no processing time at ({m}, {t})"),
                )
            })?;
        Ok(())
    })
}

/// Serialize the solution and its trace as `{"solution": ..., "trace": ...}`.
///
/// # Safety
/// `sol` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lsms_solution_to_json(
    sol: *const LsmsSolution,
    out: *mut *mut c_char,
) -> LsmsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let value = serde_json::json!({ "solution": sol.solution, "trace": sol.trace });
        *out = into_c_string(value.to_string());
        Ok(())
    })
}

/// Count constraint violations of `sol` against `inst` at tolerance `tol`,
/// using the flow mode the solution was computed with.
///
/// # Safety
/// Both handles must be live; `violations` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lsms_check_feasibility(
    inst: *const LsmsInstance,
    sol: *const LsmsSolution,
    tol: f64,
    violations: *mut u32,
) -> LsmsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let violations = violations.as_mut().ok_or_else(|| null("violations"))?;
        if tol.is_nan() || tol < 0.0 {
            return Err((
                LsmsStatus::InvalidInput,
                format!("tolerance {tol} must be nonnegative"),
            ));
        }
        let report = check_feasibility_with(&inst.inner, &sol.solution, tol, sol.flow_mode);
        *violations = report.violations.len() as u32;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lsms_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
