//! C ABI over `spike-sr`.
//!
//! Objects are opaque heap handles released with the matching `*_free`.
//! Every fallible call returns an [`SrStatus`]; on failure the message is
//! available from [`sr_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use num_complex::Complex64;
use spike_sr::decimation::coprime_shift;
use spike_sr::pipeline::{decimated_sr, Method, RecoveryResult};
use spike_sr::signal_model::wrap_dist;
use spike_sr::spectral::SampleToeplitz;
use spike_sr::{MeasurementOracle, NoiseKind, SpikeTrain, SrError};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidSpike = 3,
    OutOfBand = 4,
    ShiftInfeasible = 5,
    Degenerate = 6,
    SolverFailure = 7,
    AmbiguousAlias = 8,
    AmplitudeUnderflow = 9,
    BufferTooSmall = 10,
    Other = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrNoise {
    None = 0,
    CauchyClipped = 1,
    UniformBox = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrMethod {
    Edp = 0,
    Dmp = 1,
}

/// Opaque spike train.
pub struct SrSpike(SpikeTrain);

/// Opaque measurement oracle.
pub struct SrOracle(MeasurementOracle);

/// Opaque recovery result.
pub struct SrRecovery(RecoveryResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &SrError) -> SrStatus {
    match e.root() {
        SrError::InvalidSpike(_) | SrError::UndefinedSeparation => SrStatus::InvalidSpike,
        SrError::OutOfBand { .. } => SrStatus::OutOfBand,
        SrError::ShiftInfeasible { .. } | SrError::EmptyCandidates => SrStatus::ShiftInfeasible,
        SrError::DegenerateSampleSet { .. } | SrError::ModelOrderUnreachable { .. } => SrStatus::Degenerate,
        SrError::SolverFailure(_) => SrStatus::SolverFailure,
        SrError::AmbiguousAlias { .. } | SrError::NotCoprime { .. } => SrStatus::AmbiguousAlias,
        SrError::AmplitudeUnderflow { .. } => SrStatus::AmplitudeUnderflow,
        SrError::Domain(_) | SrError::Index(_) | SrError::Config(_) | SrError::SampleCount { .. } => {
            SrStatus::InvalidArgument
        }
        _ => SrStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SrStatus>) -> SrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SrStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            SrStatus::Panic
        }
    }
}

fn fail(e: SrError) -> SrStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn fail_with(status: SrStatus, msg: &str) -> SrStatus {
    set_error(msg);
    status
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], SrStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail_with(SrStatus::NullPointer, "null input buffer"));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, SrStatus> {
    p.as_ref().ok_or_else(|| fail_with(SrStatus::NullPointer, "null handle"))
}

fn out_ptr<T>(p: *mut T) -> Result<*mut T, SrStatus> {
    if p.is_null() {
        Err(fail_with(SrStatus::NullPointer, "null output pointer"))
    } else {
        Ok(p)
    }
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Build a spike train from `n` nodes and amplitudes split into real and
/// imaginary parts.
///
/// # Safety
/// Input arrays must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_spike_new(
    nodes: *const f64,
    amps_re: *const f64,
    amps_im: *const f64,
    n: usize,
    out: *mut *mut SrSpike,
) -> SrStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let x = in_slice(nodes, n)?;
        let re = in_slice(amps_re, n)?;
        let im = in_slice(amps_im, n)?;
        let amps = re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        let spike = SpikeTrain::new(x.to_vec(), amps).map_err(fail)?;
        *out = Box::into_raw(Box::new(SrSpike(spike)));
        Ok(())
    })
}

/// # Safety
/// `spike` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sr_spike_len(spike: *const SrSpike) -> usize {
    spike.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `spike` must come from [`sr_spike_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sr_spike_free(spike: *mut SrSpike) {
    if !spike.is_null() {
        drop(Box::from_raw(spike));
    }
}

/// Measurement oracle over `[-omega_max, omega_max]`; copies the spike.
///
/// # Safety
/// `spike` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_oracle_new(
    spike: *const SrSpike,
    omega_max: f64,
    epsilon: f64,
    noise: SrNoise,
    seed: u64,
    out: *mut *mut SrOracle,
) -> SrStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let spike = handle(spike)?;
        let kind = match noise {
            SrNoise::None => NoiseKind::None,
            SrNoise::CauchyClipped => NoiseKind::CauchyClipped,
            SrNoise::UniformBox => NoiseKind::UniformBox,
        };
        let o = MeasurementOracle::new(spike.0.clone(), omega_max, epsilon, kind, seed).map_err(fail)?;
        *out = Box::into_raw(Box::new(SrOracle(o)));
        Ok(())
    })
}

/// Noisy sample at frequency `omega`.
///
/// # Safety
/// `oracle` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_oracle_eval(oracle: *const SrOracle, omega: f64, re: *mut f64, im: *mut f64) -> SrStatus {
    guard(|| {
        let (re, im) = (out_ptr(re)?, out_ptr(im)?);
        let z = handle(oracle)?.0.eval(omega).map_err(fail)?;
        *re = z.re;
        *im = z.im;
        Ok(())
    })
}

/// # Safety
/// `oracle` must come from [`sr_oracle_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sr_oracle_free(oracle: *mut SrOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Decimated recovery of `n` nodes in `m` clusters.
///
/// # Safety
/// `oracle` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_decimated_sr(
    oracle: *const SrOracle,
    n: usize,
    m: usize,
    method: SrMethod,
    out: *mut *mut SrRecovery,
) -> SrStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let o = handle(oracle)?;
        let method = match method {
            SrMethod::Edp => Method::Edp,
            SrMethod::Dmp => Method::Dmp,
        };
        let r = decimated_sr(&o.0, n, m, method).map_err(fail)?;
        *out = Box::into_raw(Box::new(SrRecovery(r)));
        Ok(())
    })
}

/// # Safety
/// `rec` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sr_recovery_len(rec: *const SrRecovery) -> usize {
    rec.as_ref().map_or(0, |r| r.0.est_nodes.len())
}

/// Selected decimation rate (1 when selection was bypassed).
///
/// # Safety
/// `rec` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sr_recovery_rho(rec: *const SrRecovery) -> u64 {
    rec.as_ref().and_then(|r| r.0.plan.as_ref()).map_or(0, |p| p.rho)
}

/// Co-prime shift used (0 when selection was bypassed).
///
/// # Safety
/// `rec` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sr_recovery_shift(rec: *const SrRecovery) -> u64 {
    rec.as_ref().and_then(|r| r.0.plan.as_ref()).map_or(0, |p| p.t)
}

/// Copy the sorted node estimates into `nodes[0..cap]`.
///
/// # Safety
/// `rec` must be a live handle; `nodes` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn sr_recovery_nodes(rec: *const SrRecovery, nodes: *mut f64, cap: usize) -> SrStatus {
    guard(|| {
        let r = handle(rec)?;
        let x = &r.0.est_nodes;
        if cap < x.len() {
            return Err(fail_with(SrStatus::BufferTooSmall, "node buffer too small"));
        }
        ptr::copy_nonoverlapping(x.as_ptr(), out_ptr(nodes)?, x.len());
        Ok(())
    })
}

/// Copy the amplitude estimates, in node order.
///
/// # Safety
/// `rec` must be a live handle; `re` and `im` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn sr_recovery_amps(rec: *const SrRecovery, re: *mut f64, im: *mut f64, cap: usize) -> SrStatus {
    guard(|| {
        let r = handle(rec)?;
        let a = &r.0.est_amps;
        if cap < a.len() {
            return Err(fail_with(SrStatus::BufferTooSmall, "amplitude buffer too small"));
        }
        let (re, im) = (out_ptr(re)?, out_ptr(im)?);
        for (j, z) in a.iter().enumerate() {
            *re.add(j) = z.re;
            *im.add(j) = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `rec` must come from [`sr_decimated_sr`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sr_recovery_free(rec: *mut SrRecovery) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

/// Distance on the circle between two angles.
#[no_mangle]
pub extern "C" fn sr_wrap_dist(x: f64, y: f64) -> f64 {
    wrap_dist(x, y)
}

/// Smallest admissible shift co-prime to `rho`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_coprime_shift(rho: u64, omega: f64, n: usize, out: *mut u64) -> SrStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = coprime_shift(rho, omega, n).map_err(fail)?;
        Ok(())
    })
}

/// Descending singular values of the `n x n` sample Toeplitz matrix at
/// rate `rho`, written to `out[0..n]`.
///
/// # Safety
/// `oracle` must be a live handle; `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn sr_toeplitz_singular_values(
    oracle: *const SrOracle,
    rho: u64,
    n: usize,
    out: *mut f64,
    cap: usize,
) -> SrStatus {
    guard(|| {
        let o = handle(oracle)?;
        if cap < n {
            return Err(fail_with(SrStatus::BufferTooSmall, "singular value buffer too small"));
        }
        let t = SampleToeplitz::from_oracle(&o.0, rho, n).map_err(fail)?;
        let sv = t.singular_values();
        ptr::copy_nonoverlapping(sv.as_ptr(), out_ptr(out)?, sv.len());
        Ok(())
    })
}
