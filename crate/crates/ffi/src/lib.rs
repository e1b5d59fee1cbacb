//! C ABI over the neckflow library.
//!
//! Families and traces are opaque heap handles released with their `_free`
//! function. Every fallible call returns an [`NfStatus`]; on failure the
//! message is kept per thread and read back with [`nf_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use neckflow::analysis::winding_constant;
use neckflow::cli::{run, ExperimentConfig};
use neckflow::flow::{integrate, waist_state_with_angle, EventKind, GeodesicTrace, PhasePoint, StopCondition};
use neckflow::metric::{hamiltonian, CircleMetric, MetricFamily};
use neckflow::scaling::ScalingFunction;
use neckflow::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Integration = 4,
    Io = 5,
    Experiment = 6,
    Panic = 7,
}

/// A metric family on the neck.
pub struct NfFamily {
    inner: MetricFamily,
}

/// An integrated geodesic.
pub struct NfTrace {
    inner: GeodesicTrace,
}

/// Cotangent state `(z, y, xi, eta)`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NfState {
    pub z: f64,
    pub y: f64,
    pub xi: f64,
    pub eta: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NfSample {
    pub t: f64,
    pub state: NfState,
    /// Twice the Hamiltonian.
    pub energy: f64,
    pub angular_momentum: f64,
    pub angular_length: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NfTraceSummary {
    pub final_t: f64,
    pub final_state: NfState,
    pub angular_length: f64,
    pub max_energy_error: f64,
    pub steps: usize,
    /// 1 when the requested level was reached.
    pub reached: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> NfStatus {
    match e {
        Error::Config(_) | Error::UnsupportedFamily(_) | Error::DegeneratePoint | Error::MalformedReport(_) => {
            NfStatus::InvalidArgument
        }
        Error::Domain(_) | Error::NoSolution(_) | Error::Divergent(_) => NfStatus::Domain,
        Error::StepFailure { .. } | Error::CapExceeded(_) | Error::NoConvergence(_) => NfStatus::Integration,
        Error::Io(_) => NfStatus::Io,
        _ => NfStatus::Experiment,
    }
}

/// Runs `f`, recording errors and containing panics.
fn guard(f: impl FnOnce() -> Result<(), (NfStatus, String)>) -> NfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NfStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            NfStatus::Panic
        }
    }
}

fn lib<T>(r: neckflow::Result<T>) -> Result<T, (NfStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (NfStatus, String) {
    (NfStatus::NullPointer, format!("{what} is null"))
}

fn bad(msg: String) -> (NfStatus, String) {
    (NfStatus::InvalidArgument, msg)
}

unsafe fn family_of<'a>(f: *const NfFamily) -> Result<&'a MetricFamily, (NfStatus, String)> {
    f.as_ref().map(|f| &f.inner).ok_or_else(|| null("family"))
}

unsafe fn trace_of<'a>(t: *const NfTrace) -> Result<&'a GeodesicTrace, (NfStatus, String)> {
    t.as_ref().map(|t| &t.inner).ok_or_else(|| null("trace"))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (NfStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (NfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| bad(format!("{what} is not valid UTF-8")))
}

fn to_point(s: &NfState) -> PhasePoint {
    PhasePoint { z: s.z, y: s.y, xi: s.xi, eta: s.eta }
}

fn from_point(p: &PhasePoint) -> NfState {
    NfState { z: p.z, y: p.y, xi: p.xi, eta: p.eta }
}

unsafe fn emit_family(
    out_family: *mut *mut NfFamily,
    build: impl FnOnce() -> neckflow::Result<MetricFamily>,
) -> NfStatus {
    guard(|| {
        let slot = out(out_family, "out_family")?;
        *slot = ptr::null_mut();
        let inner = lib(build())?;
        *slot = Box::into_raw(Box::new(NfFamily { inner }));
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`). Returns the full message length, or 0 when
/// there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nf_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            0
        }
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Morse model family with scaling exponent `p`.
///
/// # Safety
/// `out_family` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_family_morse(k: u32, delta: f64, p: f64, out_family: *mut *mut NfFamily) -> NfStatus {
    emit_family(out_family, || MetricFamily::morse_model(k, delta, ScalingFunction::power(p)?))
}

/// Elliptic family with eccentricity parameter `delta`.
///
/// # Safety
/// `out_family` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_family_elliptic(k: u32, delta: f64, p: f64, out_family: *mut *mut NfFamily) -> NfStatus {
    emit_family(out_family, || MetricFamily::elliptic(k, delta, ScalingFunction::power(p)?))
}

/// Warped family with `h = 1 + amplitude cos y` and constant `s`.
///
/// # Safety
/// `out_family` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_family_warped(
    k: u32,
    p: f64,
    amplitude: f64,
    s: f64,
    out_family: *mut *mut NfFamily,
) -> NfStatus {
    emit_family(out_family, || {
        let h = if amplitude == 0.0 { CircleMetric::Flat } else { CircleMetric::Cosine { amplitude } };
        MetricFamily::warped(k, ScalingFunction::power(p)?, h, s)
    })
}

/// # Safety
/// `family` must be null or a handle from an `nf_family_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn nf_family_free(family: *mut NfFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// The Hamiltonian `H(z, y, xi, eta)` at parameter `eps`.
///
/// # Safety
/// `family`, `state` and `out_h` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nf_hamiltonian(
    family: *const NfFamily,
    eps: f64,
    state: *const NfState,
    out_h: *mut f64,
) -> NfStatus {
    guard(|| {
        let fam = family_of(family)?;
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        let o = out(out_h, "out_h")?;
        *o = lib(hamiltonian(fam, eps, s.z, s.y, s.xi, s.eta))?;
        Ok(())
    })
}

/// Unit-speed state on the waist `z = 0` at angle `y`, leaving at angle `phi`
/// from the waist circle.
///
/// # Safety
/// `family` and `out_state` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nf_waist_state(
    family: *const NfFamily,
    eps: f64,
    y: f64,
    phi: f64,
    out_state: *mut NfState,
) -> NfStatus {
    guard(|| {
        let fam = family_of(family)?;
        let o = out(out_state, "out_state")?;
        *o = from_point(&lib(waist_state_with_angle(fam, eps, y, phi))?);
        Ok(())
    })
}

/// Integrates from a unit-speed `start` until `z` reaches `z1` or `t_max`
/// elapses, at relative tolerance `tol`.
///
/// # Safety
/// `family`, `start` and `out_trace` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nf_integrate_to_level(
    family: *const NfFamily,
    eps: f64,
    start: *const NfState,
    z1: f64,
    t_max: f64,
    tol: f64,
    out_trace: *mut *mut NfTrace,
) -> NfStatus {
    guard(|| {
        let fam = family_of(family)?;
        let s = start.as_ref().ok_or_else(|| null("start"))?;
        let slot = out(out_trace, "out_trace")?;
        *slot = ptr::null_mut();
        if !(tol > 0.0 && t_max > 0.0) {
            return Err(bad(format!("tol and t_max must be positive, got {tol} and {t_max}")));
        }
        let stop = StopCondition::reach_z(z1).or_t_max(t_max);
        let inner = lib(integrate(fam, eps, &to_point(s), &stop, tol))?;
        *slot = Box::into_raw(Box::new(NfTrace { inner }));
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle from [`nf_integrate_to_level`], freed once.
#[no_mangle]
pub unsafe extern "C" fn nf_trace_free(trace: *mut NfTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of recorded samples; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn nf_trace_len(trace: *const NfTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.samples.len())
}

/// # Safety
/// `trace` and `out_sample` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nf_trace_sample(trace: *const NfTrace, index: usize, out_sample: *mut NfSample) -> NfStatus {
    guard(|| {
        let tr = trace_of(trace)?;
        let o = out(out_sample, "out_sample")?;
        let s = tr
            .samples
            .get(index)
            .ok_or_else(|| bad(format!("sample {index} out of range ({} samples)", tr.samples.len())))?;
        *o = NfSample {
            t: s.t,
            state: NfState { z: s.z, y: s.y, xi: s.xi, eta: s.eta },
            energy: s.energy,
            angular_momentum: s.l,
            angular_length: s.angle,
        };
        Ok(())
    })
}

/// # Safety
/// `trace` and `out_summary` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nf_trace_summary(trace: *const NfTrace, out_summary: *mut NfTraceSummary) -> NfStatus {
    guard(|| {
        let tr = trace_of(trace)?;
        let o = out(out_summary, "out_summary")?;
        let reached = tr.events.iter().any(|e| matches!(e.kind, EventKind::ZCrossing { .. }));
        *o = NfTraceSummary {
            final_t: tr.final_t,
            final_state: from_point(&tr.final_state),
            angular_length: tr.angular_length,
            max_energy_error: tr.max_energy_error,
            steps: tr.steps,
            reached: reached as i32,
        };
        Ok(())
    })
}

/// The winding constant `C_v` for profile exponent `p`, order `k` and
/// `0 <= v < 1`.
///
/// # Safety
/// `out_value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_winding_constant(v: f64, p: f64, k: u32, out_value: *mut f64) -> NfStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        let sf = lib(ScalingFunction::power(p))?;
        *o = lib(winding_constant(v, &sf, k))?.value;
        Ok(())
    })
}

/// Runs an experiment from its JSON configuration and writes the artifacts
/// into `out_dir`. `workers = 0` picks the configured or available count.
///
/// # Safety
/// `config_json` and `out_dir` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn nf_run_experiment(
    config_json: *const c_char,
    out_dir: *const c_char,
    workers: usize,
) -> NfStatus {
    guard(|| {
        let cfg = lib(ExperimentConfig::from_json(text(config_json, "config_json")?))?;
        let dir = text(out_dir, "out_dir")?;
        let n = match workers {
            0 => cfg.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            n => n,
        };
        lib(run(&cfg, Path::new(dir), n))?;
        Ok(())
    })
}
