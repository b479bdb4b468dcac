//! C ABI over `tracedist`.
//!
//! States are opaque heap handles released with [`td_state_free`]. Every fallible
//! call returns a [`TdStatus`]; on failure the message is available from
//! [`td_last_error`] until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use tracedist::bargmann::multivariate_trace;
use tracedist::bounds::pure_pure_distance;
use tracedist::fock;
use tracedist::lanczos::{trace_distance_lower_bound, trace_distance_pure_mixed, KetInput, LanczosOptions, StateInput};
use tracedist::{Error, GaussianState, PureGaussianKet};

/// Opaque Gaussian state handle.
pub struct TdState(GaussianState);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdStatus {
    Ok = 0,
    NullPointer = 1,
    Shape = 2,
    Domain = 3,
    Degenerate = 4,
    Gauge = 5,
    DegeneratePair = 6,
    CostGuard = 7,
    MetricInconsistency = 8,
    Length = 9,
    Usage = 10,
    Panic = 99,
}

/// Result of a Lanczos estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TdEstimate {
    pub value: f64,
    pub steps_used: usize,
    /// Step at which the Krylov space closed, or -1 if it never did.
    pub breakdown_step: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TdStatus {
    match e {
        Error::Shape(_) => TdStatus::Shape,
        Error::Domain(_) => TdStatus::Domain,
        Error::Degenerate { .. } => TdStatus::Degenerate,
        Error::Gauge(_) => TdStatus::Gauge,
        Error::DegeneratePair { .. } => TdStatus::DegeneratePair,
        Error::CostGuard { .. } => TdStatus::CostGuard,
        Error::MetricInconsistency { .. } => TdStatus::MetricInconsistency,
        Error::Length { .. } => TdStatus::Length,
        Error::Usage(_) => TdStatus::Usage,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TdStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            TdStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            TdStatus::Panic
        }
    }
}

unsafe fn state_ref<'a>(p: *const TdState, what: &'static str) -> Result<&'a GaussianState, Failure> {
    p.as_ref().map(|s| &s.0).ok_or(Failure::Null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn emit_state(out: *mut *mut TdState, s: GaussianState) -> Result<(), Failure> {
    write_out(out, Box::into_raw(Box::new(TdState(s))), "out")
}

/// Message for the most recent failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn td_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a state from means `r` (length 2M) and a row-major covariance `v` (2M x 2M).
///
/// # Safety
/// `r` must point to `2 * modes` doubles, `v` to `4 * modes * modes` doubles and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn td_state_new(
    hbar: f64,
    modes: usize,
    r: *const f64,
    v: *const f64,
    out: *mut *mut TdState,
) -> TdStatus {
    guard(|| {
        if r.is_null() || v.is_null() {
            return Err(Failure::Null("r or v"));
        }
        let n = 2 * modes;
        let rv = DVector::from_column_slice(std::slice::from_raw_parts(r, n));
        let vm = DMatrix::from_row_slice(n, n, std::slice::from_raw_parts(v, n * n));
        emit_state(out, GaussianState::new_valid(hbar, rv, vm)?)
    })
}

/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn td_state_vacuum(modes: usize, hbar: f64, out: *mut *mut TdState) -> TdStatus {
    guard(|| {
        if modes == 0 {
            return Err(Error::Shape("at least one mode is required".into()).into());
        }
        emit_state(out, GaussianState::vacuum(modes, hbar))
    })
}

/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn td_state_coherent(re: f64, im: f64, hbar: f64, out: *mut *mut TdState) -> TdStatus {
    guard(|| emit_state(out, GaussianState::coherent(Complex64::new(re, im), hbar)))
}

/// Displaced squeezed state `D(α)S(s)|0⟩`.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn td_state_squeezed(
    s: f64,
    re: f64,
    im: f64,
    hbar: f64,
    out: *mut *mut TdState,
) -> TdStatus {
    guard(|| emit_state(out, GaussianState::displaced_squeezed(Complex64::new(re, im), s, hbar)))
}

/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn td_state_thermal(nbar: f64, hbar: f64, out: *mut *mut TdState) -> TdStatus {
    guard(|| emit_state(out, GaussianState::thermal(nbar, hbar)?))
}

/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn td_state_squashed(nbar: f64, hbar: f64, out: *mut *mut TdState) -> TdStatus {
    guard(|| emit_state(out, GaussianState::squashed(nbar, hbar)?))
}

/// New handle holding the state after a loss channel with loss parameter `eta`.
///
/// # Safety
/// `state` must be a live handle and `out` writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn td_state_loss(state: *const TdState, eta: f64, out: *mut *mut TdState) -> TdStatus {
    guard(|| emit_state(out, state_ref(state, "state")?.loss_channel(eta)?))
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn td_state_num_modes(state: *const TdState) -> usize {
    state.as_ref().map_or(0, |s| s.0.num_modes())
}

/// Copies the means (2M) and row-major covariance (4M²) into caller buffers.
///
/// # Safety
/// `r` and `v` must hold at least `2M` and `4M²` doubles.
#[no_mangle]
pub unsafe extern "C" fn td_state_moments(state: *const TdState, r: *mut f64, v: *mut f64) -> TdStatus {
    guard(|| {
        let s = state_ref(state, "state")?;
        if r.is_null() || v.is_null() {
            return Err(Failure::Null("r or v"));
        }
        let n = 2 * s.num_modes();
        std::slice::from_raw_parts_mut(r, n).copy_from_slice(s.means().as_slice());
        let rows = std::slice::from_raw_parts_mut(v, n * n);
        for i in 0..n {
            for j in 0..n {
                rows[i * n + j] = s.cov()[(i, j)];
            }
        }
        Ok(())
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `state` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn td_state_free(state: *mut TdState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

fn to_estimate(e: &tracedist::lanczos::DistanceEstimate) -> TdEstimate {
    TdEstimate {
        value: e.value,
        steps_used: e.steps_used,
        breakdown_step: e.breakdown_step().map_or(-1, |s| s as i64),
    }
}

/// Lanczos estimate of `d(|ψ⟩⟨ψ|, ρ)`; `psi` must be pure.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn td_trace_distance_pure_mixed(
    psi: *const TdState,
    rho: *const TdState,
    steps: usize,
    out: *mut TdEstimate,
) -> TdStatus {
    guard(|| {
        let psi = PureGaussianKet::new(state_ref(psi, "psi")?.clone())?;
        let rho = state_ref(rho, "rho")?.clone();
        let est = trace_distance_pure_mixed(
            &KetInput::Gaussian(psi),
            &StateInput::Gaussian(rho),
            steps,
            &LanczosOptions::default(),
        )?;
        write_out(out, to_estimate(&est), "out")
    })
}

/// Lower bound on `d(ρ₁, ρ₂)` from the Krylov space of the pure `trial`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn td_trace_distance_lower_bound(
    rho1: *const TdState,
    rho2: *const TdState,
    trial: *const TdState,
    steps: usize,
    out: *mut TdEstimate,
) -> TdStatus {
    guard(|| {
        let trial = PureGaussianKet::new(state_ref(trial, "trial")?.clone())?;
        let est = trace_distance_lower_bound(
            &StateInput::Gaussian(state_ref(rho1, "rho1")?.clone()),
            &StateInput::Gaussian(state_ref(rho2, "rho2")?.clone()),
            &KetInput::Gaussian(trial),
            steps,
            &LanczosOptions::default(),
        )?;
        write_out(out, to_estimate(&est), "out")
    })
}

/// `√(1 − |⟨ψ₁|ψ₂⟩|²)` for two pure states.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn td_pure_pure_distance(a: *const TdState, b: *const TdState, out: *mut f64) -> TdStatus {
    guard(|| {
        let a = PureGaussianKet::new(state_ref(a, "a")?.clone())?;
        let b = PureGaussianKet::new(state_ref(b, "b")?.clone())?;
        write_out(out, pure_pure_distance(&a, &b)?, "out")
    })
}

/// `Tr(ρ₁ρ₂⋯ρ_n)` as a complex number.
///
/// # Safety
/// `states` must point to `n` live handles; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn td_multivariate_trace(
    states: *const *const TdState,
    n: usize,
    re: *mut f64,
    im: *mut f64,
) -> TdStatus {
    guard(|| {
        if states.is_null() {
            return Err(Failure::Null("states"));
        }
        let list = std::slice::from_raw_parts(states, n)
            .iter()
            .map(|&p| state_ref(p, "states[i]").cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let z = multivariate_trace(&list)?;
        write_out(re, z.re, "re")?;
        write_out(im, z.im, "im")
    })
}

/// Reference value `½ Σ|eig(ρ₁ − ρ₂)|` in a Fock basis truncated at `cutoff` (at most two modes).
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn td_fock_trace_distance(
    a: *const TdState,
    b: *const TdState,
    cutoff: usize,
    out: *mut f64,
) -> TdStatus {
    guard(|| {
        let fa = fock::gaussian_to_fock(state_ref(a, "a")?, cutoff)?;
        let fb = fock::gaussian_to_fock(state_ref(b, "b")?, cutoff)?;
        write_out(out, fock::trace_distance_exact(&fa, &fb)?, "out")
    })
}
