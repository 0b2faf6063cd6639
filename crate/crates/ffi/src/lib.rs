//! C ABI over `rplab`.
//!
//! Every fallible function returns an [`RplabStatus`] and writes its result
//! through out-pointers. Kernels and torus couplings are opaque handles that
//! the caller releases with the matching `_free` function. The message of
//! the most recent error on the calling thread is available from
//! [`rplab_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rplab::chessboard::{duality_pt, peierls_certificate};
use rplab::kernels::{
    mean_field_error_integral, periodize_to_tolerance, transience_integral, CouplingMatrix, KernelSpec, TorusGreens,
    DEFAULT_TAIL_TOLERANCE,
};
use rplab::quadrature::QuadratureSpec;
use rplab::torus::TorusSpec;
use rplab::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RplabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotApplicable = 3,
    Tolerance = 4,
    Divergent = 5,
    Numerical = 6,
    Io = 7,
    Panic = 8,
}

/// Opaque coupling kernel on `Z^d`.
pub struct RplabKernel(KernelSpec);

/// Opaque periodized couplings on a torus.
pub struct RplabCouplings(CouplingMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RplabStatus {
    match e {
        Error::Validation(_) | Error::Usage(_) | Error::Json(_) => RplabStatus::InvalidArgument,
        Error::NotApplicable(_) => RplabStatus::NotApplicable,
        Error::Tolerance(_) | Error::Truncation { .. } => RplabStatus::Tolerance,
        Error::Divergent(_) => RplabStatus::Divergent,
        Error::Numerical(_) => RplabStatus::Numerical,
        Error::Io { .. } => RplabStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> RplabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RplabStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            RplabStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_last_error(format!("null pointer passed as `{}`", stringify!($p)));
            return RplabStatus::NullPointer;
        })+
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rplab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last error on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rplab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

fn new_kernel(build: impl FnOnce() -> Result<KernelSpec, Error>, out: *mut *mut RplabKernel) -> RplabStatus {
    non_null!(out);
    guard(|| {
        let k = build()?;
        // SAFETY: `out` was checked non-null; the caller owns the storage.
        unsafe { *out = Box::into_raw(Box::new(RplabKernel(k))) };
        Ok(())
    })
}

/// Nearest-neighbour kernel in `dim` dimensions.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rplab_kernel_nearest_neighbor(dim: usize, out: *mut *mut RplabKernel) -> RplabStatus {
    new_kernel(|| KernelSpec::nearest_neighbor(dim), out)
}

/// Yukawa kernel `∝ e^{-μ|x|₁}`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rplab_kernel_yukawa(dim: usize, mu: f64, out: *mut *mut RplabKernel) -> RplabStatus {
    new_kernel(|| KernelSpec::yukawa(dim, mu), out)
}

/// Power-law kernel `∝ |x|₁^{-s}`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rplab_kernel_power_law(dim: usize, s: f64, out: *mut *mut RplabKernel) -> RplabStatus {
    new_kernel(|| KernelSpec::power_law(dim, s), out)
}

/// Releases a kernel. NULL is ignored.
///
/// # Safety
/// `kernel` must come from an `rplab_kernel_*` constructor and not have
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn rplab_kernel_free(kernel: *mut RplabKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Transience integral with the default quadrature. `*finite` is false and
/// `*value` NaN when the walk is recurrent.
///
/// # Safety
/// `kernel` must be a live handle; `value` and `finite` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rplab_transience_integral(
    kernel: *const RplabKernel,
    value: *mut f64,
    finite: *mut bool,
) -> RplabStatus {
    non_null!(kernel, value, finite);
    let k = &(*kernel).0;
    guard(|| {
        let t = transience_integral(k, &QuadratureSpec::for_dim(k.dim()))?;
        *value = t.value().unwrap_or(f64::NAN);
        *finite = t.is_finite();
        Ok(())
    })
}

/// `I_d = ∫ Ĵ²/(1 - Ĵ)`; fails with `Divergent` for recurrent walks.
///
/// # Safety
/// `kernel` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rplab_mean_field_error_integral(kernel: *const RplabKernel, value: *mut f64) -> RplabStatus {
    non_null!(kernel, value);
    let k = &(*kernel).0;
    guard(|| {
        *value = mean_field_error_integral(k, &QuadratureSpec::for_dim(k.dim()))?.estimate;
        Ok(())
    })
}

/// Periodizes `kernel` on the torus of even side `side`.
///
/// # Safety
/// `kernel` must be a live handle; `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rplab_couplings_new(
    kernel: *const RplabKernel,
    side: usize,
    out: *mut *mut RplabCouplings,
) -> RplabStatus {
    non_null!(kernel, out);
    let k = &(*kernel).0;
    guard(|| {
        let torus = TorusSpec::new(k.dim(), side)?;
        let j = periodize_to_tolerance(k, torus, DEFAULT_TAIL_TOLERANCE)?;
        *out = Box::into_raw(Box::new(RplabCouplings(j)));
        Ok(())
    })
}

/// Releases couplings. NULL is ignored.
///
/// # Safety
/// `couplings` must come from [`rplab_couplings_new`] and not have been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn rplab_couplings_free(couplings: *mut RplabCouplings) {
    if !couplings.is_null() {
        drop(Box::from_raw(couplings));
    }
}

/// Number of torus sites.
///
/// # Safety
/// `couplings` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn rplab_couplings_volume(couplings: *const RplabCouplings) -> usize {
    if couplings.is_null() {
        0
    } else {
        (*couplings).0.torus().volume()
    }
}

/// Copies `J_{0,x}` for every site into `values`, which must hold
/// `len >= volume` doubles.
///
/// # Safety
/// `couplings` must be a live handle; `values` must be writable for `len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn rplab_couplings_values(
    couplings: *const RplabCouplings,
    values: *mut f64,
    len: usize,
) -> RplabStatus {
    non_null!(couplings, values);
    let src = (*couplings).0.values();
    if len < src.len() {
        set_last_error(format!("buffer holds {len} values, need {}", src.len()));
        return RplabStatus::InvalidArgument;
    }
    ptr::copy_nonoverlapping(src.as_ptr(), values, src.len());
    RplabStatus::Ok
}

/// Torus Green's function `G_L(0,0)`.
///
/// # Safety
/// `couplings` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rplab_greens_diagonal(couplings: *const RplabCouplings, value: *mut f64) -> RplabStatus {
    non_null!(couplings, value);
    let j = &(*couplings).0;
    guard(|| {
        *value = TorusGreens::new(j)?.diagonal();
        Ok(())
    })
}

/// Peierls certificate for the double-well model with circuit constant `c`.
///
/// # Safety
/// `passed` and `margin` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rplab_peierls_certificate(
    beta: f64,
    kappa: f64,
    c: f64,
    passed: *mut bool,
    margin: *mut f64,
) -> RplabStatus {
    non_null!(passed, margin);
    guard(|| {
        let cert = peierls_certificate(beta, kappa, c)?;
        *passed = cert.passed();
        *margin = cert.margin;
        Ok(())
    })
}

/// Same certificate as a JSON document. Release the string with
/// [`rplab_string_free`].
///
/// # Safety
/// `json` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rplab_peierls_certificate_json(
    beta: f64,
    kappa: f64,
    c: f64,
    json: *mut *mut c_char,
) -> RplabStatus {
    non_null!(json);
    guard(|| {
        let cert = peierls_certificate(beta, kappa, c)?;
        let text = serde_json::to_string(&cert)?;
        *json = CString::new(text)
            .map_err(|e| Error::Numerical(e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn rplab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Gradient-model duality point `p_t(κ_O, κ_D)`.
///
/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rplab_duality_pt(kappa_o: f64, kappa_d: f64, value: *mut f64) -> RplabStatus {
    non_null!(value);
    guard(|| {
        *value = duality_pt(kappa_o, kappa_d)?;
        Ok(())
    })
}

/// Runs the command-line tool in-process with `argc` NUL-terminated
/// arguments (program name first) and returns its exit code.
///
/// # Safety
/// `argv` must point to `argc` valid C strings.
#[no_mangle]
pub unsafe extern "C" fn rplab_cli_run(argc: usize, argv: *const *const c_char) -> i32 {
    if argv.is_null() {
        return 1;
    }
    let mut args = Vec::with_capacity(argc);
    for i in 0..argc {
        let p = *argv.add(i);
        if p.is_null() {
            return 1;
        }
        args.push(CStr::from_ptr(p).to_string_lossy().into_owned());
    }
    catch_unwind(|| rplab::cli::run(args)).unwrap_or(2)
}
