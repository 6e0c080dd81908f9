//! C ABI over the traveling-wave solver and stability analysis.
//!
//! Waves live behind an opaque [`RchWave`] handle created by
//! [`rch_wave_new`] and released by [`rch_wave_free`]. Every fallible call
//! returns an [`RchStatus`]; on failure [`rch_last_error`] describes what went
//! wrong on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rchwave::cli::{wave_at, CliError, PartialConfig};
use rchwave::stability::{analyze, Criterion, Decision};
use rchwave::wave::WavePoint;
use rchwave::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RchStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoConvergence = 3,
    NumericalFailure = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque converged wave.
pub struct RchWave {
    inner: WavePoint,
}

/// Scalars of a wave.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct RchScalars {
    pub c: f64,
    pub omega: f64,
    /// Integration constant of the profile equation.
    pub a_const: f64,
    pub mass: f64,
    pub energy: f64,
    pub momentum: f64,
    pub max_phi: f64,
    /// `min(c - φ)`.
    pub min_gap: f64,
    pub residual_norm: f64,
    /// Number of grid points of the profile.
    pub grid_len: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RchDecision {
    SpectrallyStable = 0,
    Inconclusive = 1,
    FlaggedFold = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RchCriterion {
    DePositive = 0,
    DcDa = 1,
    None = 2,
}

/// Stability verdict with the scalars it rests on.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RchVerdict {
    pub decision: RchDecision,
    pub criterion: RchCriterion,
    pub n_l: u32,
    pub z_l: u32,
    pub n_lpi: u32,
    pub z_lpi: u32,
    pub theta: f64,
    pub d_c: f64,
    pub da_dc: f64,
    pub de_dc: f64,
    pub det_a0: f64,
    pub inner_l_inv_1_1: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: RchStatus, msg: impl Into<String>) -> RchStatus {
    set_error(msg.into());
    status
}

fn from_cli(e: CliError) -> RchStatus {
    let status = match &e {
        CliError::Config(_) | CliError::Io { .. } => RchStatus::InvalidArgument,
        CliError::Numerical { source: Error::NoConvergence { .. }, .. } => RchStatus::NoConvergence,
        CliError::Numerical { .. } => RchStatus::NumericalFailure,
    };
    fail(status, e.to_string())
}

fn guarded(f: impl FnOnce() -> RchStatus) -> RchStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(RchStatus::Panic, "internal panic"))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rch_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Computes the wave of speed `c` at drift `omega` on `n_modes` Fourier modes.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rch_wave_new(omega: f64, c: f64, n_modes: u32, tol: f64, out: *mut *mut RchWave) -> RchStatus {
    if out.is_null() {
        return fail(RchStatus::NullPointer, "out is NULL");
    }
    guarded(|| {
        let cfg = PartialConfig {
            omega: Some(omega),
            c: Some(c),
            n_modes: Some(n_modes as usize),
            newton_tol: Some(tol),
            ..Default::default()
        }
        .resolve();
        match cfg.and_then(|cfg| wave_at(&cfg, c)) {
            Ok(w) => {
                // SAFETY: checked non-null above; the caller guarantees validity.
                unsafe { *out = Box::into_raw(Box::new(RchWave { inner: w })) };
                RchStatus::Ok
            }
            Err(e) => from_cli(e),
        }
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `w` must come from [`rch_wave_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rch_wave_free(w: *mut RchWave) {
    if !w.is_null() {
        // SAFETY: ownership returns to Rust exactly once per the contract.
        drop(unsafe { Box::from_raw(w) });
    }
}

/// # Safety
/// `w` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rch_wave_scalars(w: *const RchWave, out: *mut RchScalars) -> RchStatus {
    // SAFETY: caller contract.
    let (Some(w), Some(out)) = (unsafe { w.as_ref() }, unsafe { out.as_mut() }) else {
        return fail(RchStatus::NullPointer, "NULL argument");
    };
    guarded(|| {
        let w = &w.inner;
        let q = w.conserved();
        *out = RchScalars {
            c: w.c,
            omega: w.omega,
            a_const: w.a_const,
            mass: q.m,
            energy: q.e,
            momentum: q.f,
            max_phi: w.amplitude(),
            min_gap: w.min_gap,
            residual_norm: w.residual_norm,
            grid_len: w.grid().len(),
        };
        RchStatus::Ok
    })
}

/// Copies the profile on the uniform grid `x_j = 2πj/len` into `buf`.
/// `written` receives the grid length, also when the buffer is too small.
///
/// # Safety
/// `w` must be a live handle, `buf` valid for `len` writes, `written` for one.
#[no_mangle]
pub unsafe extern "C" fn rch_wave_profile(w: *const RchWave, buf: *mut f64, len: usize, written: *mut usize) -> RchStatus {
    // SAFETY: caller contract.
    let (Some(w), Some(written)) = (unsafe { w.as_ref() }, unsafe { written.as_mut() }) else {
        return fail(RchStatus::NullPointer, "NULL argument");
    };
    guarded(|| {
        let field = w.inner.phi.to_field();
        let values = field.values();
        *written = values.len();
        if buf.is_null() {
            return fail(RchStatus::NullPointer, "buf is NULL");
        }
        if len < values.len() {
            return fail(RchStatus::BufferTooSmall, format!("need {} values, got room for {len}", values.len()));
        }
        // SAFETY: buf holds at least `len >= values.len()` doubles.
        unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
        RchStatus::Ok
    })
}

/// Runs the full stability analysis of a wave.
///
/// # Safety
/// `w` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rch_wave_analyze(w: *const RchWave, out: *mut RchVerdict) -> RchStatus {
    // SAFETY: caller contract.
    let (Some(w), Some(out)) = (unsafe { w.as_ref() }, unsafe { out.as_mut() }) else {
        return fail(RchStatus::NullPointer, "NULL argument");
    };
    guarded(|| {
        let w = &w.inner;
        let a = match analyze(w, rchwave::wave::NEWTON_TOL, None) {
            Ok(a) => a,
            Err(e) => {
                let c = e.speed().unwrap_or(w.c);
                let status =
                    if matches!(e, Error::NoConvergence { .. }) { RchStatus::NoConvergence } else { RchStatus::NumericalFailure };
                return fail(status, format!("analysis failed at c = {c}: {e}"));
            }
        };
        let v = a.verdict;
        *out = RchVerdict {
            decision: match v.decision {
                Decision::SpectrallyStable => RchDecision::SpectrallyStable,
                Decision::Inconclusive => RchDecision::Inconclusive,
                Decision::FlaggedFold => RchDecision::FlaggedFold,
            },
            criterion: match v.criterion {
                Criterion::DePositive => RchCriterion::DePositive,
                Criterion::DcDa => RchCriterion::DcDa,
                Criterion::None => RchCriterion::None,
            },
            n_l: v.n_l as u32,
            z_l: v.z_l as u32,
            n_lpi: v.n_lpi as u32,
            z_lpi: v.z_lpi as u32,
            theta: v.theta,
            d_c: v.d_c,
            da_dc: v.da_dc,
            de_dc: v.de_dc,
            det_a0: v.det_a0,
            inner_l_inv_1_1: v.inner_l_inv_1_1,
        };
        RchStatus::Ok
    })
}
