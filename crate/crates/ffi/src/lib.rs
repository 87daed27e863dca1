//! C ABI over the `inertial-hpe` solver.
//!
//! Problems and results are opaque heap handles released with their `_free`
//! functions. Every fallible call returns an [`HpeStatus`]; on failure the
//! message is available from [`hpe_last_error`] on the same thread. Panics are
//! caught at the boundary and reported as [`HpeStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use inertial_hpe::error::HpeError;
use inertial_hpe::format;
use inertial_hpe::hpe::{parameter_condition, SolveResult, StopReason, Variant};
use inertial_hpe::oracles::derive_fbf_params;
use inertial_hpe::problems::{GeneratorSpec, ProblemInstance};
use inertial_hpe::runner::{self, Analysis, OracleKind, Overrides};

/// Status codes; 0 to 4 match the `hpe` command's exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HpeStatus {
    Ok = 0,
    MaxIterations = 2,
    StepViolation = 3,
    InvalidConfig = 4,
    NullPointer = 5,
    Io = 6,
    BufferTooSmall = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HpeOracle {
    Ipp = 0,
    Fb = 1,
    Fbf = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HpeVariant {
    Standard = 0,
    Relaxed = 1,
}

/// Solve options. Fields set to NaN (reals), 0 (`max_iters`) or -1
/// (`enforce_step_inequality`) fall back to the oracle defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HpeSolveOptions {
    pub oracle: HpeOracle,
    pub variant: HpeVariant,
    pub alpha: f64,
    pub sigma: f64,
    pub c: f64,
    pub tol: f64,
    pub max_iters: u64,
    pub enforce_step_inequality: i32,
}

/// One trace row. `has_phi` is 0 when no reference solution was known, in
/// which case `phi` and `mu` are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HpeTraceRecord {
    pub k: u64,
    pub step_sq: f64,
    pub gap_sq: f64,
    pub v_sq: f64,
    pub eps: f64,
    pub r_norm: f64,
    pub slack: f64,
    pub phi: f64,
    pub mu: f64,
    pub has_phi: i32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HpeFbfParams {
    pub sigma_bar: f64,
    pub sigma: f64,
    /// Infinite when `beta = 0`.
    pub c_max: f64,
    pub window_lower: f64,
    pub window_upper: f64,
}

/// Opaque problem handle.
pub struct HpeProblem {
    inner: ProblemInstance,
}

/// Opaque result handle.
pub struct HpeResult {
    result: SolveResult,
    analysis: Analysis,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_for(err: &HpeError) -> HpeStatus {
    match err {
        HpeError::StepViolation { .. } | HpeError::IdentityViolation { .. } => HpeStatus::StepViolation,
        HpeError::NonFinite { .. } => HpeStatus::MaxIterations,
        HpeError::Io(_) => HpeStatus::Io,
        _ => HpeStatus::InvalidConfig,
    }
}

fn fail(status: HpeStatus, msg: impl Into<String>) -> HpeStatus {
    set_last_error(msg);
    status
}

fn fail_with(err: HpeError) -> HpeStatus {
    fail(status_for(&err), err.to_string())
}

/// Runs `f`, converting panics into [`HpeStatus::Panic`].
fn guard(f: impl FnOnce() -> HpeStatus) -> HpeStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(HpeStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, HpeStatus> {
    if s.is_null() {
        return Err(fail(HpeStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(HpeStatus::InvalidConfig, "string argument is not UTF-8"))
}

fn optional(v: f64) -> Option<f64> {
    (!v.is_nan()).then_some(v)
}

unsafe fn publish_problem(out: *mut *mut HpeProblem, p: Result<ProblemInstance, HpeError>) -> HpeStatus {
    match p {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(HpeProblem { inner }));
            HpeStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn hpe_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn hpe_solve_options_default(oracle: HpeOracle) -> HpeSolveOptions {
    HpeSolveOptions {
        oracle,
        variant: HpeVariant::Standard,
        alpha: f64::NAN,
        sigma: f64::NAN,
        c: f64::NAN,
        tol: f64::NAN,
        max_iters: 0,
        enforce_step_inequality: -1,
    }
}

/// Builds a problem from a generator spec such as `saddle,n=4,seed=11`.
///
/// # Safety
/// `spec` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_generate(spec: *const c_char, out: *mut *mut HpeProblem) -> HpeStatus {
    guard(|| {
        if out.is_null() {
            return fail(HpeStatus::NullPointer, "out is null");
        }
        let spec = match read_str(spec) {
            Ok(s) => s,
            Err(status) => return status,
        };
        publish_problem(out, spec.parse::<GeneratorSpec>().and_then(|g| g.generate()))
    })
}

/// Loads a TOML problem file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_load(path: *const c_char, out: *mut *mut HpeProblem) -> HpeStatus {
    guard(|| {
        if out.is_null() {
            return fail(HpeStatus::NullPointer, "out is null");
        }
        let path = match read_str(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        publish_problem(out, format::read_problem(Path::new(path)))
    })
}

/// Parses a problem from TOML text.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_from_toml(text: *const c_char, out: *mut *mut HpeProblem) -> HpeStatus {
    guard(|| {
        if out.is_null() {
            return fail(HpeStatus::NullPointer, "out is null");
        }
        let text = match read_str(text) {
            Ok(s) => s,
            Err(status) => return status,
        };
        publish_problem(out, format::problem_from_toml(text))
    })
}

/// # Safety
/// `problem` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_dimension(problem: *const HpeProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.metadata.dimension)
}

/// Writes the problem as TOML.
///
/// # Safety
/// `problem` must be a handle from this library and `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_save(problem: *const HpeProblem, path: *const c_char) -> HpeStatus {
    guard(|| {
        let Some(problem) = problem.as_ref() else {
            return fail(HpeStatus::NullPointer, "problem is null");
        };
        let path = match read_str(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match format::write_problem(Path::new(path), &problem.inner) {
            Ok(()) => HpeStatus::Ok,
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `problem` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_free(problem: *mut HpeProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

fn overrides(opts: &HpeSolveOptions) -> Overrides {
    Overrides {
        alpha: optional(opts.alpha),
        sigma: optional(opts.sigma),
        c: optional(opts.c),
        variant: Some(match opts.variant {
            HpeVariant::Standard => Variant::Standard,
            HpeVariant::Relaxed => Variant::Relaxed,
        }),
        max_iters: (opts.max_iters > 0).then_some(opts.max_iters as usize),
        tol: optional(opts.tol),
        enforce_step_inequality: match opts.enforce_step_inequality {
            0 => Some(false),
            1 => Some(true),
            _ => None,
        },
    }
}

/// Runs the solver. `*out` is set to null first and receives a result handle
/// when the run stops normally (`Ok`, or `MaxIterations` at the limit). A
/// diverging run reports `MaxIterations` with no handle.
///
/// # Safety
/// `problem` must be a handle from this library; `opts` may be null for IPP
/// defaults; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hpe_solve(
    problem: *const HpeProblem,
    opts: *const HpeSolveOptions,
    out: *mut *mut HpeResult,
) -> HpeStatus {
    guard(|| {
        let Some(problem) = problem.as_ref() else {
            return fail(HpeStatus::NullPointer, "problem is null");
        };
        if out.is_null() {
            return fail(HpeStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let opts = opts.as_ref().copied().unwrap_or_else(|| hpe_solve_options_default(HpeOracle::Ipp));
        let oracle = match opts.oracle {
            HpeOracle::Ipp => OracleKind::Ipp,
            HpeOracle::Fb => OracleKind::Fb,
            HpeOracle::Fbf => OracleKind::Fbf,
        };
        let problem = &problem.inner;
        let solved = runner::solve(problem, oracle, &overrides(&opts))
            .and_then(|(plan, result)| runner::analyze(problem, &plan, &result).map(|analysis| (result, analysis)));
        match solved {
            Ok((result, analysis)) => {
                let status = match result.stop_reason {
                    StopReason::Converged => HpeStatus::Ok,
                    StopReason::MaxIterations => HpeStatus::MaxIterations,
                };
                *out = Box::into_raw(Box::new(HpeResult { result, analysis }));
                status
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `result` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_iterations(result: *const HpeResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.iterations)
}

/// 1 when the run stopped on the residual tolerance.
///
/// # Safety
/// `result` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_converged(result: *const HpeResult) -> i32 {
    result.as_ref().map_or(0, |r| (r.result.stop_reason == StopReason::Converged) as i32)
}

/// # Safety
/// `result` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_dimension(result: *const HpeResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.x.len())
}

/// Copies the final iterate into `buf`, which must hold `len >= dimension` doubles.
///
/// # Safety
/// `result` must be a handle from this library and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_copy_x(result: *const HpeResult, buf: *mut f64, len: usize) -> HpeStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(HpeStatus::NullPointer, "result is null");
        };
        if buf.is_null() {
            return fail(HpeStatus::NullPointer, "buf is null");
        }
        let x = &r.result.x;
        if len < x.len() {
            return fail(HpeStatus::BufferTooSmall, format!("need {} entries, got {len}", x.len()));
        }
        ptr::copy_nonoverlapping(x.as_ptr(), buf, x.len());
        HpeStatus::Ok
    })
}

/// Inclusion residual at the final iterate.
///
/// # Safety
/// `result` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_final_residual(result: *const HpeResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.analysis.final_residual)
}

/// Distance to the problem's known solution, NaN when none is stored.
///
/// # Safety
/// `result` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_distance_to_known(result: *const HpeResult) -> f64 {
    result.as_ref().and_then(|r| r.analysis.distance_to_known).unwrap_or(f64::NAN)
}

/// Number of decrease-bound violations of the Lyapunov sequence, -1 when unchecked.
///
/// # Safety
/// `result` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_mu_violations(result: *const HpeResult) -> i64 {
    result.as_ref().and_then(|r| r.analysis.mu.as_ref()).map_or(-1, |m| m.violations.len() as i64)
}

/// # Safety
/// `result` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_trace_len(result: *const HpeResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.trace.len())
}

/// # Safety
/// `result` must be a handle from this library and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_trace_record(
    result: *const HpeResult,
    index: usize,
    out: *mut HpeTraceRecord,
) -> HpeStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(HpeStatus::NullPointer, "result is null");
        };
        if out.is_null() {
            return fail(HpeStatus::NullPointer, "out is null");
        }
        let Some(rec) = r.result.trace.get(index) else {
            return fail(HpeStatus::OutOfRange, format!("index {index} >= {}", r.result.trace.len()));
        };
        *out = HpeTraceRecord {
            k: rec.k as u64,
            step_sq: rec.step_sq,
            gap_sq: rec.gap_sq,
            v_sq: rec.v_sq,
            eps: rec.eps,
            r_norm: rec.r_norm,
            slack: rec.slack,
            phi: rec.phi.unwrap_or(f64::NAN),
            mu: rec.mu.unwrap_or(f64::NAN),
            has_phi: rec.phi.is_some() as i32,
        };
        HpeStatus::Ok
    })
}

/// Writes the trace in the same CSV layout as `hpe solve --trace`.
///
/// # Safety
/// `result` must be a handle from this library and `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_write_csv(result: *const HpeResult, path: *const c_char) -> HpeStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(HpeStatus::NullPointer, "result is null");
        };
        let path = match read_str(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let written = std::fs::File::create(path)
            .map_err(HpeError::from)
            .and_then(|f| format::write_trace_csv(std::io::BufWriter::new(f), &r.result.trace));
        match written {
            Ok(()) => HpeStatus::Ok,
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `result` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hpe_result_free(result: *mut HpeResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Evaluates the parameter condition for `variant`; `Ok` iff it is below 1.
///
/// # Safety
/// `value` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hpe_check_parameters(
    alpha: f64,
    sigma: f64,
    variant: HpeVariant,
    value: *mut f64,
) -> HpeStatus {
    guard(|| {
        let variant = match variant {
            HpeVariant::Standard => Variant::Standard,
            HpeVariant::Relaxed => Variant::Relaxed,
        };
        let v = parameter_condition(alpha, sigma, variant);
        if let Some(out) = value.as_mut() {
            *out = v;
        }
        if alpha >= 0.0 && sigma >= 0.0 && v < 1.0 {
            HpeStatus::Ok
        } else {
            fail(HpeStatus::InvalidConfig, format!("parameter condition evaluates to {v}"))
        }
    })
}

/// Forward-backward-forward tolerances for inertia `alpha` and Lipschitz
/// modulus `beta`. A NaN `sigma_bar` selects the window midpoint.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hpe_derive_fbf_params(
    alpha: f64,
    beta: f64,
    sigma_bar: f64,
    out: *mut HpeFbfParams,
) -> HpeStatus {
    guard(|| {
        let Some(out) = out.as_mut() else {
            return fail(HpeStatus::NullPointer, "out is null");
        };
        let window = inertial_hpe::oracles::fbf_sigma_bar_window(alpha);
        match (window, derive_fbf_params(alpha, beta, optional(sigma_bar))) {
            (Ok((lo, hi)), Ok(p)) => {
                *out = HpeFbfParams {
                    sigma_bar: p.sigma_bar,
                    sigma: p.sigma,
                    c_max: p.c_max,
                    window_lower: lo,
                    window_upper: hi,
                };
                HpeStatus::Ok
            }
            (Err(e), _) | (_, Err(e)) => fail_with(e),
        }
    })
}
