//! C ABI over `gsa_dof`.
//!
//! Every fallible function returns a `GsaStatus`; on failure the message is
//! kept per thread and read with `gsa_last_error`. Schemes are opaque
//! handles released with `gsa_scheme_free`; strings returned by the library
//! are released with `gsa_string_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_traits::ToPrimitive;

use gsa_dof::dof_bounds::{achievable_dof, regime_of, upper_bound, RegimeLabel};
use gsa_dof::gsa::verify_alignment;
use gsa_dof::relay::{prepare_link, Link, SymbolKind};
use gsa_dof::{Error, RationalDof, SystemConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    NeedsExtension = 4,
    Numerical = 5,
    Overflow = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsaRegimeKind {
    RelayLimited = 0,
    Plateau = 1,
    Slope = 2,
    SourceLimited = 3,
}

/// `num / den` in lowest terms with `den > 0`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GsaRational {
    pub num: i64,
    pub den: i64,
}

/// Opaque scheme handle.
pub struct GsaScheme {
    link: Link,
    cfg: SystemConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GsaStatus {
    match e.root() {
        Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::Dimension(_) => GsaStatus::InvalidArgument,
        Error::Infeasible(_)
        | Error::AlignmentInfeasible { .. }
        | Error::ExtensionCap { .. }
        | Error::BroadcastInfeasible(_) => GsaStatus::Infeasible,
        Error::NeedsExtension { .. } => GsaStatus::NeedsExtension,
        Error::DegenerateChannel(_)
        | Error::DegenerateSplit { .. }
        | Error::AlignmentVerification { .. }
        | Error::Decodability(_)
        | Error::DegenerateFit(_) => GsaStatus::Numerical,
        _ => GsaStatus::Internal,
    }
}

fn guard<F: FnOnce() -> Result<(), (GsaStatus, String)>>(f: F) -> GsaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GsaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GsaStatus::Panic
        }
    }
}

fn lib(e: Error) -> (GsaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (GsaStatus, String) {
    (GsaStatus::NullPointer, format!("{name} is null"))
}

fn config(k: u32, m: u32, n: u32) -> Result<SystemConfig, (GsaStatus, String)> {
    SystemConfig::new(k as usize, m as usize, n as usize).map_err(lib)
}

fn to_c(r: &RationalDof) -> Result<GsaRational, (GsaStatus, String)> {
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(num), Some(den)) => Ok(GsaRational { num, den }),
        _ => Err((GsaStatus::Overflow, format!("{r} does not fit in 64-bit integers"))),
    }
}

/// Message for the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gsa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Upper bound on the sum DoF for K users with M antennas and N relay antennas.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsa_upper_bound(k: u32, m: u32, n: u32, out: *mut GsaRational) -> GsaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = to_c(&upper_bound(&config(k, m, n)?).map_err(lib)?)?;
        unsafe { *out = v };
        Ok(())
    })
}

/// Achievable sum DoF of the alignment construction.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsa_achievable_dof(k: u32, m: u32, n: u32, out: *mut GsaRational) -> GsaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = to_c(&achievable_dof(&config(k, m, n)?).map_err(lib)?)?;
        unsafe { *out = v };
        Ok(())
    })
}

/// Branch of the upper bound; `beta` is 0 for the relay- and source-limited
/// branches.
///
/// # Safety
/// `kind` and `beta` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsa_regime(k: u32, m: u32, n: u32, kind: *mut GsaRegimeKind, beta: *mut u32) -> GsaStatus {
    guard(|| {
        if kind.is_null() {
            return Err(null("kind"));
        }
        if beta.is_null() {
            return Err(null("beta"));
        }
        let label = regime_of(&config(k, m, n)?).map_err(lib)?;
        let (kd, b) = match label {
            RegimeLabel::RelayLimited2N => (GsaRegimeKind::RelayLimited, 0),
            RegimeLabel::PlateauBeta(b) => (GsaRegimeKind::Plateau, b),
            RegimeLabel::SlopeBeta(b) => (GsaRegimeKind::Slope, b),
            RegimeLabel::SourceLimitedKM => (GsaRegimeKind::SourceLimited, 0),
        };
        unsafe {
            *kind = kd;
            *beta = b;
        }
        Ok(())
    })
}

/// Sample channels from `seed`, extend if needed, and build the uplink
/// scheme and downlink precoder for corner `beta`.
///
/// # Safety
/// `out` must be null or valid for writes. On success `*out` owns a handle
/// to release with `gsa_scheme_free`.
#[no_mangle]
pub unsafe extern "C" fn gsa_scheme_synthesize(
    k: u32,
    m: u32,
    n: u32,
    beta: u32,
    seed: u64,
    out: *mut *mut GsaScheme,
) -> GsaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { *out = ptr::null_mut() };
        let cfg = config(k, m, n)?;
        let link = prepare_link(&cfg, beta, seed).map_err(lib)?;
        let handle = Box::into_raw(Box::new(GsaScheme { link, cfg }));
        unsafe { *out = handle };
        Ok(())
    })
}

/// # Safety
/// `scheme` must be null or a handle from `gsa_scheme_synthesize` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gsa_scheme_free(scheme: *mut GsaScheme) {
    if !scheme.is_null() {
        drop(unsafe { Box::from_raw(scheme) });
    }
}

/// Dimensions of the (possibly extended) scheme.
///
/// # Safety
/// `scheme` must be a live handle; outputs must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsa_scheme_info(
    scheme: *const GsaScheme,
    extension: *mut u64,
    d_total: *mut usize,
    alignment_residual: *mut f64,
    b_cond: *mut f64,
) -> GsaStatus {
    guard(|| {
        let s = unsafe { scheme.as_ref() }.ok_or_else(|| null("scheme"))?;
        unsafe {
            if let Some(p) = extension.as_mut() {
                *p = s.link.plan.ext.t;
            }
            if let Some(p) = d_total.as_mut() {
                *p = s.link.scheme.alloc.d_total;
            }
            if let Some(p) = alignment_residual.as_mut() {
                *p = s.link.scheme.metrics.alignment_max;
            }
            if let Some(p) = b_cond.as_mut() {
                *p = s.link.scheme.metrics.b_cond;
            }
        }
        Ok(())
    })
}

/// Re-check the alignment conditions on the scheme's channels.
///
/// # Safety
/// `scheme` must be a live handle; `passed` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsa_scheme_verify(scheme: *const GsaScheme, passed: *mut bool) -> GsaStatus {
    guard(|| {
        let s = unsafe { scheme.as_ref() }.ok_or_else(|| null("scheme"))?;
        if passed.is_null() {
            return Err(null("passed"));
        }
        let ok = verify_alignment(&s.link.scheme, &s.link.channels).passed;
        unsafe { *passed = ok };
        Ok(())
    })
}

/// One frame through both phases. `user_error` is NaN when the downlink
/// precoder is infeasible.
///
/// # Safety
/// `scheme` must be a live handle; outputs must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsa_scheme_simulate(
    scheme: *const GsaScheme,
    noise_var: f64,
    relay_error: *mut f64,
    user_error: *mut f64,
) -> GsaStatus {
    guard(|| {
        let s = unsafe { scheme.as_ref() }.ok_or_else(|| null("scheme"))?;
        let r = s.link.run(&s.cfg, noise_var, SymbolKind::Gaussian).map_err(lib)?;
        unsafe {
            if let Some(p) = relay_error.as_mut() {
                *p = r.relay_recovery_error;
            }
            if let Some(p) = user_error.as_mut() {
                *p = r.max_user_error().unwrap_or(f64::NAN);
            }
        }
        Ok(())
    })
}

/// Scheme as JSON. Release the string with `gsa_string_free`.
///
/// # Safety
/// `scheme` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsa_scheme_to_json(scheme: *const GsaScheme, out: *mut *mut c_char) -> GsaStatus {
    guard(|| {
        let s = unsafe { scheme.as_ref() }.ok_or_else(|| null("scheme"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = s.link.scheme.to_json().map_err(lib)?;
        let c = CString::new(text).map_err(|e| (GsaStatus::Internal, e.to_string()))?;
        unsafe { *out = c.into_raw() };
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gsa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Read the last error as an owned Rust string; for tests and Rust callers.
pub fn last_error_message() -> Option<String> {
    let p = gsa_last_error();
    if p.is_null() {
        None
    } else {
        Some(unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
    }
}
