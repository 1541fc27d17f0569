//! C ABI for `prootkit`.
//!
//! Matrices cross the boundary as opaque `PrkMatrix` handles, data as
//! row-major `double` buffers. Every fallible call returns a `PrkStatus`;
//! after a failure `prk_last_error_message` describes it. Handles and strings
//! returned by this library must be released with `prk_matrix_free` and
//! `prk_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use prootkit::bench::solve;
use prootkit::costmodel::cost_entry;
use prootkit::mmio::read_matrix_market;
use prootkit::{build_plan, Error, Matrix, MethodTag, StoppingRule};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Singular = 4,
    NoConvergence = 5,
    Breakdown = 6,
    Io = 7,
    Parse = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrkMethod {
    Plain = 0,
    In = 1,
    Iter39 = 2,
    Coupled = 3,
    Variant = 4,
}

impl From<PrkMethod> for MethodTag {
    fn from(m: PrkMethod) -> Self {
        match m {
            PrkMethod::Plain => MethodTag::Plain,
            PrkMethod::In => MethodTag::In,
            PrkMethod::Iter39 => MethodTag::Iter39,
            PrkMethod::Coupled => MethodTag::Coupled,
            PrkMethod::Variant => MethodTag::Variant,
        }
    }
}

/// Opaque dense matrix.
pub struct PrkMatrix(Matrix);

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PrkRootOptions {
    pub p: usize,
    pub method: PrkMethod,
    pub tol: f64,
    pub h_tol: f64,
    pub max_iter: usize,
    /// Iterate on A^(1/2)/||A^(1/2)||_F instead of A.
    pub precondition: bool,
    /// Return the root of A rather than of the matrix iterated on.
    pub recover: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PrkRootInfo {
    pub iterations: usize,
    /// Relative residual of the returned root against its own target.
    pub final_residual: f64,
    pub matmuls: u64,
    pub lus: u64,
    /// Counted flops of the iteration, preconditioning excluded.
    pub flops: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> PrkStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::NotSquare { .. } => PrkStatus::DimensionMismatch,
        Error::Singular { .. } => PrkStatus::Singular,
        Error::Breakdown { .. } => PrkStatus::Breakdown,
        Error::NonConvergence { .. } => PrkStatus::NoConvergence,
        Error::PlanDegree { .. } | Error::InvalidArgument(_) => PrkStatus::InvalidArgument,
        Error::Parse { .. } | Error::Csv(_) => PrkStatus::Parse,
        Error::Io(_) => PrkStatus::Io,
    }
}

fn fail(status: PrkStatus, msg: impl Into<String>) -> PrkStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PrkStatus) -> PrkStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(PrkStatus::Panic, "internal panic"))
}

fn into_handle(m: Matrix) -> *mut PrkMatrix {
    Box::into_raw(Box::new(PrkMatrix(m)))
}

/// Message for the last failure on this thread, or NULL. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn prk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Copies `rows * cols` row-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prk_matrix_from_rows(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut PrkMatrix,
) -> PrkStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return fail(PrkStatus::NullPointer, "null pointer argument");
        }
        let Some(len) = rows.checked_mul(cols) else {
            return fail(PrkStatus::InvalidArgument, "rows * cols overflows");
        };
        // SAFETY: caller guarantees `data` holds `len` doubles.
        let values = unsafe { std::slice::from_raw_parts(data, len) }.to_vec();
        match Matrix::new(rows, cols, values) {
            Ok(m) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = into_handle(m) };
                PrkStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Reads a MatrixMarket file (coordinate or array, real/integer/pattern).
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prk_matrix_read_mm(path: *const c_char, out: *mut *mut PrkMatrix) -> PrkStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(PrkStatus::NullPointer, "null pointer argument");
        }
        // SAFETY: caller guarantees a valid C string.
        let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
            return fail(PrkStatus::InvalidArgument, "path is not valid UTF-8");
        };
        match read_matrix_market(Path::new(path)) {
            Ok(m) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = into_handle(m) };
                PrkStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `m` must be NULL or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn prk_matrix_free(m: *mut PrkMatrix) {
    if !m.is_null() {
        // SAFETY: handle came from `Box::into_raw`.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn prk_matrix_rows(m: *const PrkMatrix) -> usize {
    // SAFETY: caller guarantees a live handle or NULL.
    unsafe { m.as_ref() }.map_or(0, |m| m.0.rows())
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn prk_matrix_cols(m: *const PrkMatrix) -> usize {
    // SAFETY: caller guarantees a live handle or NULL.
    unsafe { m.as_ref() }.map_or(0, |m| m.0.cols())
}

/// Copies the entries row-major into `buf`, which holds `len` doubles.
///
/// # Safety
/// `m` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn prk_matrix_copy_to(m: *const PrkMatrix, buf: *mut f64, len: usize) -> PrkStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or NULL.
        let Some(m) = (unsafe { m.as_ref() }) else {
            return fail(PrkStatus::NullPointer, "null matrix");
        };
        if buf.is_null() {
            return fail(PrkStatus::NullPointer, "null buffer");
        }
        let src = m.0.as_slice();
        if len < src.len() {
            return fail(
                PrkStatus::InvalidArgument,
                format!("buffer holds {len} values, matrix has {}", src.len()),
            );
        }
        // SAFETY: `buf` has room for `len >= src.len()` doubles.
        unsafe { ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len()) };
        PrkStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn prk_root_options_default(p: usize) -> PrkRootOptions {
    let stop = StoppingRule::default();
    PrkRootOptions {
        p,
        method: PrkMethod::Variant,
        tol: stop.tol,
        h_tol: stop.h_tol,
        max_iter: stop.max_iter,
        precondition: true,
        recover: true,
    }
}

/// Computes a `p`-th root of `a`. On `PRK_STATUS_OK` stores a new handle in
/// `out` and fills `info` if it is non-NULL. On `NO_CONVERGENCE` or
/// `BREAKDOWN`, `info` still describes the last iterate and `out` is left
/// untouched.
///
/// # Safety
/// `a` must be a live handle, `opts` readable, `out` writable, `info` NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn prk_root(
    a: *const PrkMatrix,
    opts: *const PrkRootOptions,
    out: *mut *mut PrkMatrix,
    info: *mut PrkRootInfo,
) -> PrkStatus {
    guard(|| {
        // SAFETY: caller guarantees live/readable pointers or NULL.
        let (Some(a), Some(opts)) = (unsafe { a.as_ref() }, unsafe { opts.as_ref() }) else {
            return fail(PrkStatus::NullPointer, "null pointer argument");
        };
        if out.is_null() {
            return fail(PrkStatus::NullPointer, "null output pointer");
        }
        if opts.p < 2 {
            return fail(PrkStatus::InvalidArgument, format!("p must be at least 2, got {}", opts.p));
        }
        let stop = StoppingRule {
            tol: opts.tol,
            h_tol: opts.h_tol,
            max_iter: opts.max_iter,
        };
        let write_info = |i: PrkRootInfo| {
            // SAFETY: caller guarantees `info` is NULL or writable.
            if let Some(slot) = unsafe { info.as_mut() } {
                *slot = i;
            }
        };
        match solve(&a.0, opts.p, opts.method.into(), opts.precondition, &stop) {
            Ok(sol) => {
                let (root, residual) = if opts.recover {
                    (sol.recovered(), sol.recovered_residual())
                } else {
                    (sol.root.clone(), sol.report.final_residual())
                };
                write_info(PrkRootInfo {
                    iterations: sol.report.iterations(),
                    final_residual: residual,
                    matmuls: sol.counter.matmul_count(),
                    lus: sol.counter.lu_count(),
                    flops: sol.counter.flop_estimate_f64(),
                });
                // SAFETY: `out` checked non-null.
                unsafe { *out = into_handle(root) };
                PrkStatus::Ok
            }
            Err(e) => {
                if let Some(rep) = e.report() {
                    write_info(PrkRootInfo {
                        iterations: rep.iterations(),
                        final_residual: rep.final_residual(),
                        matmuls: rep.rows.last().map_or(0, |r| r.cum_matmuls),
                        lus: rep.rows.last().map_or(0, |r| r.cum_lus),
                        flops: rep.rows.last().map_or(0.0, |r| r.cum_flop_estimate),
                    });
                }
                fail(status_of(&e), e.to_string())
            }
        }
    })
}

/// Number of matrix products the evaluation plan for `P_d` spends.
#[no_mangle]
pub extern "C" fn prk_plan_cost(d: usize) -> usize {
    build_plan(d).matmul_cost()
}

/// Factored form of `P_d` as a new string; free with `prk_string_free`.
#[no_mangle]
pub extern "C" fn prk_plan_form(d: usize) -> *mut c_char {
    CString::new(build_plan(d).factored_form()).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn prk_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: `s` came from `CString::into_raw`.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Per-iteration cost of `method` as the exact fraction `num/den` of `n^3`.
///
/// # Safety
/// `num` and `den` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prk_cost_coeff(method: PrkMethod, p: usize, num: *mut i64, den: *mut i64) -> PrkStatus {
    guard(|| {
        if num.is_null() || den.is_null() {
            return fail(PrkStatus::NullPointer, "null output pointer");
        }
        if p < 2 {
            return fail(PrkStatus::InvalidArgument, format!("p must be at least 2, got {p}"));
        }
        let c = cost_entry(method.into(), p).cubic_coeff;
        // SAFETY: both checked non-null.
        unsafe {
            *num = *c.numer();
            *den = *c.denom();
        }
        PrkStatus::Ok
    })
}
