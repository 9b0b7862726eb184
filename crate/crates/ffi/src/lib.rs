//! C ABI for the annulus-extremal solver.
//!
//! Metrics and solutions are opaque handles created and released through this
//! interface. Every fallible call returns an [`AxStatus`]; on failure the
//! message is available from [`ax_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use annulus_extremal::cli::{exit_code, EXIT_INFEASIBLE, EXIT_PARSE};
use annulus_extremal::{alpha0, nitsche_bound, solve, verify, AnnulusPair, Error, ExtremalSolution, MetricSpec, Table, Weights};
use libc::c_char;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxStatus {
    Ok = 0,
    /// Invalid or unparsable input.
    InvalidArgument = 2,
    /// `r` exceeds the admissibility bound.
    Infeasible = 3,
    /// Quadrature, root finding or grid failure.
    Numerical = 4,
    NullPointer = 5,
    /// Output buffer too small; the required length was written.
    BufferTooSmall = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Opaque radial metric.
pub struct AxMetric {
    inner: MetricSpec,
}

/// Opaque solved instance.
pub struct AxSolution {
    inner: ExtremalSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> AxStatus {
    match exit_code(e) {
        EXIT_PARSE => AxStatus::InvalidArgument,
        EXIT_INFEASIBLE => AxStatus::Infeasible,
        _ => AxStatus::Numerical,
    }
}

fn guard<F: FnOnce() -> Result<(), AxStatus>>(f: F) -> AxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AxStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic in annulus-extremal");
            AxStatus::Panic
        }
    }
}

fn lift<T>(r: annulus_extremal::Result<T>) -> Result<T, AxStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> AxStatus {
    set_error(&format!("{what} is null"));
    AxStatus::NullPointer
}

unsafe fn metric_ref<'a>(m: *const AxMetric) -> Result<&'a MetricSpec, AxStatus> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("metric"))
}

unsafe fn solution_ref<'a>(s: *const AxSolution) -> Result<&'a ExtremalSolution, AxStatus> {
    s.as_ref().map(|s| &s.inner).ok_or_else(|| null("solution"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), AxStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

fn boxed_metric(m: MetricSpec) -> *mut AxMetric {
    Box::into_raw(Box::new(AxMetric { inner: m }))
}

/// `ρ ≡ 1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ax_metric_constant(out: *mut *mut AxMetric) -> AxStatus {
    guard(|| write_out(out, boxed_metric(MetricSpec::Constant)))
}

/// `ρ(s) = s^(−λ)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ax_metric_power(lambda: f64, out: *mut *mut AxMetric) -> AxStatus {
    guard(|| {
        let m = lift(MetricSpec::power(lambda))?;
        write_out(out, boxed_metric(m))
    })
}

/// Tabulated metric from `n` samples `(s[i], rho[i])`.
///
/// # Safety
/// `s` and `rho` must point to `n` readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ax_metric_tabulated(s: *const f64, rho: *const f64, n: usize, out: *mut *mut AxMetric) -> AxStatus {
    guard(|| {
        if s.is_null() || rho.is_null() {
            return Err(null("table column"));
        }
        let s = std::slice::from_raw_parts(s, n).to_vec();
        let rho = std::slice::from_raw_parts(rho, n).to_vec();
        let t = lift(Table::new(s, rho))?;
        write_out(out, boxed_metric(MetricSpec::Tabulated(t)))
    })
}

/// Parses `const`, `power:<λ>` or `table:<path>`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ax_metric_parse(text: *const c_char, out: *mut *mut AxMetric) -> AxStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|_| {
            set_error("metric text is not UTF-8");
            AxStatus::InvalidArgument
        })?;
        let m = lift(MetricSpec::parse(text))?;
        write_out(out, boxed_metric(m))
    })
}

/// Releases a metric; null is ignored.
///
/// # Safety
/// `m` must come from an `ax_metric_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ax_metric_free(m: *mut AxMetric) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// `α₀ = −min b²s²ρ²` on `[1, R]` and the minimizer.
///
/// # Safety
/// `m` must be a live metric; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ax_alpha0(m: *const AxMetric, a: f64, b: f64, big_r: f64, out_alpha0: *mut f64, out_s_star: *mut f64) -> AxStatus {
    guard(|| {
        let m = metric_ref(m)?;
        let w = lift(Weights::new(a, b))?;
        let (a0, s) = lift(alpha0(m, &w, big_r))?;
        write_out(out_alpha0, a0)?;
        write_out(out_s_star, s)
    })
}

/// Admissibility bound `r_max`; `+∞` when the integral diverges.
///
/// # Safety
/// `m` must be a live metric; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ax_nitsche_bound(m: *const AxMetric, a: f64, b: f64, big_r: f64, out: *mut f64) -> AxStatus {
    guard(|| {
        let m = metric_ref(m)?;
        let w = lift(Weights::new(a, b))?;
        write_out(out, lift(nitsche_bound(m, &w, big_r))?)
    })
}

/// Solves the instance with `samples` profile points.
///
/// # Safety
/// `m` must be a live metric; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ax_solve(
    m: *const AxMetric,
    a: f64,
    b: f64,
    r: f64,
    big_r: f64,
    samples: usize,
    out: *mut *mut AxSolution,
) -> AxStatus {
    guard(|| {
        let m = metric_ref(m)?;
        let w = lift(Weights::new(a, b))?;
        let ann = lift(AnnulusPair::new(r, big_r))?;
        let sol = lift(solve(m, &w, &ann, samples))?;
        write_out(out, Box::into_raw(Box::new(AxSolution { inner: sol })))
    })
}

/// Releases a solution; null is ignored.
///
/// # Safety
/// `s` must come from [`ax_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ax_solution_free(s: *mut AxSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// First-integral constant `α`, or NaN for a null handle.
///
/// # Safety
/// `s` must be null or a live solution.
#[no_mangle]
pub unsafe extern "C" fn ax_solution_alpha(s: *const AxSolution) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.inner.alpha)
}

/// # Safety
/// `s` must be null or a live solution.
#[no_mangle]
pub unsafe extern "C" fn ax_solution_alpha0(s: *const AxSolution) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.inner.alpha0)
}

/// # Safety
/// `s` must be null or a live solution.
#[no_mangle]
pub unsafe extern "C" fn ax_solution_energy(s: *const AxSolution) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.inner.energy)
}

/// # Safety
/// `s` must be null or a live solution.
#[no_mangle]
pub unsafe extern "C" fn ax_solution_distortion(s: *const AxSolution) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.inner.distortion)
}

/// # Safety
/// `s` must be null or a live solution.
#[no_mangle]
pub unsafe extern "C" fn ax_solution_r_max(s: *const AxSolution) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.inner.r_max)
}

/// 1 when `r` sits on the bound, 0 otherwise or for a null handle.
///
/// # Safety
/// `s` must be null or a live solution.
#[no_mangle]
pub unsafe extern "C" fn ax_solution_critical(s: *const AxSolution) -> i32 {
    s.as_ref().map_or(0, |s| s.inner.critical as i32)
}

/// Number of profile samples, 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live solution.
#[no_mangle]
pub unsafe extern "C" fn ax_solution_len(s: *const AxSolution) -> usize {
    s.as_ref().map_or(0, |s| s.inner.profile.len())
}

/// Copies the samples `t`, `H`, `Hdot` into buffers of capacity `cap`.
/// `out_len` receives the sample count, also when the buffers are too small.
///
/// # Safety
/// `s` must be a live solution; each buffer must hold `cap` doubles; `out_len` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ax_solution_copy_profile(
    s: *const AxSolution,
    t: *mut f64,
    h: *mut f64,
    hdot: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> AxStatus {
    guard(|| {
        let p = &solution_ref(s)?.profile;
        write_out(out_len, p.len())?;
        if cap < p.len() {
            set_error(&format!("buffers hold {cap} samples, {} needed", p.len()));
            return Err(AxStatus::BufferTooSmall);
        }
        if t.is_null() || h.is_null() || hdot.is_null() {
            return Err(null("profile buffer"));
        }
        ptr::copy_nonoverlapping(p.t_samples().as_ptr(), t, p.len());
        ptr::copy_nonoverlapping(p.h_samples().as_ptr(), h, p.len());
        ptr::copy_nonoverlapping(p.hdot_samples().as_ptr(), hdot, p.len());
        Ok(())
    })
}

/// Runs the verification battery; `out_passed` is 1 when every check passes.
/// `out_el_residual` and `out_duality_gap` may be null.
///
/// # Safety
/// `s` must be a live solution; non-null outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ax_solution_verify(
    s: *const AxSolution,
    out_passed: *mut i32,
    out_el_residual: *mut f64,
    out_duality_gap: *mut f64,
) -> AxStatus {
    guard(|| {
        let sol = solution_ref(s)?;
        let rep = lift(verify(&sol.metric, &sol.weights(), sol))?;
        write_out(out_passed, rep.passed as i32)?;
        if !out_el_residual.is_null() {
            out_el_residual.write(rep.el_residual_sup);
        }
        if !out_duality_gap.is_null() {
            out_duality_gap.write(rep.duality_gap_rel);
        }
        Ok(())
    })
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ax_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn ax_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
