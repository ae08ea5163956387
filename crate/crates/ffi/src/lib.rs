//! C ABI for thetaforge.
//!
//! Objects cross the boundary as opaque handles created by `tf_*_new` style
//! constructors and released with the matching `*_free`. Every fallible call
//! returns a `TfStatus`; on failure `tf_last_error_message` describes the
//! error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use thetaforge::harness::{run_suite, sample_tau, RunConfig};
use thetaforge::jacobi::classical_jacobi_residual;
use thetaforge::{theta_jet, PeriodMatrix, RationalVector, ThetaError, ThetaJet, TruncationPolicy};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidPeriodMatrix = 3,
    DimensionMismatch = 4,
    Numerical = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

/// Period matrix handle.
pub struct TfPeriodMatrix(PeriodMatrix);

/// Theta jet handle.
pub struct TfThetaJet(ThetaJet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &ThetaError) -> TfStatus {
    match e {
        ThetaError::InvalidPeriodMatrix(_) | ThetaError::NearBoundary { .. } => TfStatus::InvalidPeriodMatrix,
        ThetaError::DimensionMismatch { .. } => TfStatus::DimensionMismatch,
        ThetaError::InvalidArgument(_)
        | ThetaError::OrderMismatch { .. }
        | ThetaError::Inadmissible(_)
        | ThetaError::UnknownSuite(_) => TfStatus::InvalidArgument,
        ThetaError::Config(_) => TfStatus::Config,
        ThetaError::Io(_) => TfStatus::Io,
        _ => TfStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's
/// last-error message.
fn guard<F: FnOnce() -> Result<(), ThetaError>>(f: F) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TfStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            TfStatus::Panic
        }
    }
}

fn null() -> ThetaError {
    ThetaError::InvalidArgument("null pointer".into())
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, ThetaError> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| ThetaError::InvalidArgument("string is not UTF-8".into()))
}

unsafe fn read_complex(re: *const f64, im: *const f64, len: usize) -> Result<Vec<Complex64>, ThetaError> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if re.is_null() || im.is_null() {
        return Err(null());
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = std::slice::from_raw_parts(im, len);
    Ok(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
}

unsafe fn write_complex(c: Complex64, re: *mut f64, im: *mut f64) -> Result<(), ThetaError> {
    if re.is_null() || im.is_null() {
        return Err(null());
    }
    *re = c.re;
    *im = c.im;
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a period matrix from row-major real and imaginary parts (`genus^2` each).
///
/// # Safety
/// `re` and `im` must point to `genus * genus` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_period_matrix_new(
    genus: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut TfPeriodMatrix,
) -> TfStatus {
    if out.is_null() {
        return TfStatus::NullPointer;
    }
    guard(|| {
        let entries = read_complex(re, im, genus * genus)?;
        let tau = PeriodMatrix::new(genus, entries)?;
        *out = Box::into_raw(Box::new(TfPeriodMatrix(tau)));
        Ok(())
    })
}

/// The seeded sample `index` of genus `genus`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_period_matrix_sample(
    genus: usize,
    seed: u64,
    index: u64,
    out: *mut *mut TfPeriodMatrix,
) -> TfStatus {
    if out.is_null() {
        return TfStatus::NullPointer;
    }
    guard(|| {
        if genus == 0 {
            return Err(ThetaError::InvalidArgument("genus must be at least 1".into()));
        }
        *out = Box::into_raw(Box::new(TfPeriodMatrix(sample_tau(genus, seed, index))));
        Ok(())
    })
}

/// # Safety
/// `tau` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tf_period_matrix_genus(tau: *const TfPeriodMatrix) -> usize {
    tau.as_ref().map_or(0, |t| t.0.genus())
}

/// Entry `(j, k)` of the period matrix.
///
/// # Safety
/// `tau` must be a handle from this library; `re`, `im` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_period_matrix_entry(
    tau: *const TfPeriodMatrix,
    j: usize,
    k: usize,
    re: *mut f64,
    im: *mut f64,
) -> TfStatus {
    let Some(t) = tau.as_ref() else {
        return TfStatus::NullPointer;
    };
    guard(|| {
        let g = t.0.genus();
        if j >= g || k >= g {
            return Err(ThetaError::DimensionMismatch { expected: g, got: j.max(k) + 1 });
        }
        write_complex(t.0.entry(j, k), re, im)
    })
}

/// # Safety
/// `tau` must be NULL or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn tf_period_matrix_free(tau: *mut TfPeriodMatrix) {
    if !tau.is_null() {
        drop(Box::from_raw(tau));
    }
}

/// Jet of `theta[eps, delta](tau, z)`. Characteristics are strings such as
/// `"(1/2, 0)"`; `z` has `genus` entries (both pointers may be NULL for `z = 0`).
///
/// # Safety
/// Pointers must be valid as described; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_theta_jet(
    tau: *const TfPeriodMatrix,
    z_re: *const f64,
    z_im: *const f64,
    eps: *const c_char,
    delta: *const c_char,
    out: *mut *mut TfThetaJet,
) -> TfStatus {
    let (Some(t), false) = (tau.as_ref(), out.is_null()) else {
        return TfStatus::NullPointer;
    };
    guard(|| {
        let g = t.0.genus();
        let z = if z_re.is_null() && z_im.is_null() {
            vec![Complex64::new(0.0, 0.0); g]
        } else {
            read_complex(z_re, z_im, g)?
        };
        let eps: RationalVector = read_str(eps)?.parse()?;
        let delta: RationalVector = read_str(delta)?.parse()?;
        let jet = theta_jet(&t.0, &z, &eps, &delta, &TruncationPolicy::default())?;
        *out = Box::into_raw(Box::new(TfThetaJet(jet)));
        Ok(())
    })
}

/// # Safety
/// `jet` must be a handle from this library; `re`, `im` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_theta_jet_value(jet: *const TfThetaJet, re: *mut f64, im: *mut f64) -> TfStatus {
    let Some(j) = jet.as_ref() else {
        return TfStatus::NullPointer;
    };
    guard(|| write_complex(j.0.value, re, im))
}

/// Component `i` of the z-gradient.
///
/// # Safety
/// `jet` must be a handle from this library; `re`, `im` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_theta_jet_gradient(jet: *const TfThetaJet, i: usize, re: *mut f64, im: *mut f64) -> TfStatus {
    let Some(j) = jet.as_ref() else {
        return TfStatus::NullPointer;
    };
    guard(|| {
        let v = j.0.gradient.get(i).ok_or(ThetaError::DimensionMismatch { expected: j.0.genus(), got: i + 1 })?;
        write_complex(*v, re, im)
    })
}

fn matrix_entry(m: &nalgebra::DMatrix<Complex64>, i: usize, k: usize) -> Result<Complex64, ThetaError> {
    if i >= m.nrows() || k >= m.ncols() {
        return Err(ThetaError::DimensionMismatch { expected: m.nrows(), got: i.max(k) + 1 });
    }
    Ok(m[(i, k)])
}

/// Entry `(i, k)` of the z-Hessian.
///
/// # Safety
/// `jet` must be a handle from this library; `re`, `im` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_theta_jet_hessian(
    jet: *const TfThetaJet,
    i: usize,
    k: usize,
    re: *mut f64,
    im: *mut f64,
) -> TfStatus {
    let Some(j) = jet.as_ref() else {
        return TfStatus::NullPointer;
    };
    guard(|| write_complex(matrix_entry(&j.0.hessian, i, k)?, re, im))
}

/// Entry `(i, k)` of the weighted tau-derivative matrix (weight 1/2 off the diagonal).
///
/// # Safety
/// `jet` must be a handle from this library; `re`, `im` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_theta_jet_tau_deriv(
    jet: *const TfThetaJet,
    i: usize,
    k: usize,
    re: *mut f64,
    im: *mut f64,
) -> TfStatus {
    let Some(j) = jet.as_ref() else {
        return TfStatus::NullPointer;
    };
    guard(|| write_complex(matrix_entry(&j.0.tau_deriv, i, k)?, re, im))
}

/// Nonzero when the truncation cap was hit.
///
/// # Safety
/// `jet` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tf_theta_jet_degraded(jet: *const TfThetaJet) -> bool {
    jet.as_ref().is_some_and(|j| j.0.degraded)
}

/// # Safety
/// `jet` must be NULL or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn tf_theta_jet_free(jet: *mut TfThetaJet) {
    if !jet.is_null() {
        drop(Box::from_raw(jet));
    }
}

/// Relative residual of Jacobi's derivative formula at a genus-one `tau`.
///
/// # Safety
/// `tau` must be a handle from this library; `residual` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_classical_jacobi_residual(tau: *const TfPeriodMatrix, residual: *mut f64) -> TfStatus {
    let (Some(t), false) = (tau.as_ref(), residual.is_null()) else {
        return TfStatus::NullPointer;
    };
    guard(|| {
        *residual = classical_jacobi_residual(&t.0, &TruncationPolicy::default())?.residual;
        Ok(())
    })
}

/// Runs the suites described by a JSON config (same fields as the CLI config
/// file) and returns the JSON report, to be released with `tf_string_free`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `report`, `pass` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_run_suite_json(
    config_json: *const c_char,
    report: *mut *mut c_char,
    pass: *mut bool,
) -> TfStatus {
    if report.is_null() || pass.is_null() {
        return TfStatus::NullPointer;
    }
    guard(|| {
        let text = read_str(config_json)?;
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ThetaError::Config(e.to_string()))?;
        let r = run_suite(&cfg)?;
        *pass = r.pass;
        *report = CString::new(r.to_json()).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn tf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
