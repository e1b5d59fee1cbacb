use std::ffi::{c_char, CStr, CString};
use std::ptr;

use neckflow::analysis::winding_constant;
use neckflow::flow::{integrate, waist_state_with_angle, StopCondition};
use neckflow::metric::{CircleMetric, MetricFamily};
use neckflow::scaling::ScalingFunction;
use neckflow_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { nf_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn warped_flat() -> *mut NfFamily {
    let mut fam = ptr::null_mut();
    assert_eq!(unsafe { nf_family_warped(2, 2.0, 0.0, 0.0, &mut fam) }, NfStatus::Ok);
    assert!(!fam.is_null());
    fam
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(nf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut h = 0.0;
    let s = NfState::default();
    assert_eq!(unsafe { nf_hamiltonian(ptr::null(), 0.1, &s, &mut h) }, NfStatus::NullPointer);
    assert!(last_error().contains("family"));
    assert_eq!(unsafe { nf_family_morse(2, 0.5, 2.0, ptr::null_mut()) }, NfStatus::NullPointer);
    assert_eq!(unsafe { nf_trace_len(ptr::null()) }, 0);
    unsafe {
        nf_family_free(ptr::null_mut());
        nf_trace_free(ptr::null_mut());
    }
}

#[test]
fn bad_parameters_leave_a_null_handle_and_a_message() {
    let mut fam = ptr::NonNull::<NfFamily>::dangling().as_ptr();
    assert_eq!(unsafe { nf_family_morse(2, 0.5, 1.0, &mut fam) }, NfStatus::InvalidArgument);
    assert!(fam.is_null());
    assert!(!last_error().is_empty());

    let mut c = 0.0;
    assert_eq!(unsafe { nf_winding_constant(1.0, 2.0, 2, &mut c) }, NfStatus::Domain);
    // A later success clears the message.
    assert_eq!(unsafe { nf_winding_constant(0.5, 2.0, 2, &mut c) }, NfStatus::Ok);
    assert_eq!(unsafe { nf_last_error(ptr::null_mut(), 0) }, 0);
}

#[test]
fn error_message_is_truncated_to_the_buffer() {
    let mut c = 0.0;
    assert_eq!(unsafe { nf_winding_constant(2.0, 2.0, 2, &mut c) }, NfStatus::Domain);
    let full = unsafe { nf_last_error(ptr::null_mut(), 0) };
    let mut buf = [1 as c_char; 8];
    assert_eq!(unsafe { nf_last_error(buf.as_mut_ptr(), buf.len()) }, full);
    assert!(full > 7);
    assert_eq!(buf[7], 0);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 7);
}

#[test]
fn waist_state_has_unit_speed() {
    let fam = warped_flat();
    let mut s = NfState::default();
    assert_eq!(unsafe { nf_waist_state(fam, 0.05, 0.3, 0.7, &mut s) }, NfStatus::Ok);
    let mut h = 0.0;
    assert_eq!(unsafe { nf_hamiltonian(fam, 0.05, &s, &mut h) }, NfStatus::Ok);
    assert!((h - 0.5).abs() < 1e-14, "H = {h}");
    unsafe { nf_family_free(fam) };
}

#[test]
fn trace_matches_the_library_call() {
    let fam = warped_flat();
    let (eps, phi) = (0.02, 0.8);
    let mut s = NfState::default();
    assert_eq!(unsafe { nf_waist_state(fam, eps, 0.0, phi, &mut s) }, NfStatus::Ok);
    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { nf_integrate_to_level(fam, eps, &s, 1.0, 50.0, 1e-10, &mut tr) }, NfStatus::Ok);

    let mut sum = NfTraceSummary::default();
    assert_eq!(unsafe { nf_trace_summary(tr, &mut sum) }, NfStatus::Ok);
    assert_eq!(sum.reached, 1);
    assert!((sum.final_state.z - 1.0).abs() < 1e-9);
    assert!(sum.max_energy_error < 1e-8);

    let direct_fam = MetricFamily::warped(2, ScalingFunction::power(2.0).unwrap(), CircleMetric::Flat, 0.0).unwrap();
    let start = waist_state_with_angle(&direct_fam, eps, 0.0, phi).unwrap();
    let direct = integrate(&direct_fam, eps, &start, &StopCondition::reach_z(1.0).or_t_max(50.0), 1e-10).unwrap();
    assert_eq!(sum.angular_length, direct.angular_length);
    assert_eq!(sum.steps, direct.steps);

    let n = unsafe { nf_trace_len(tr) };
    assert_eq!(n, direct.samples.len());
    let mut first = NfSample::default();
    let mut last = NfSample::default();
    assert_eq!(unsafe { nf_trace_sample(tr, 0, &mut first) }, NfStatus::Ok);
    assert_eq!(unsafe { nf_trace_sample(tr, n - 1, &mut last) }, NfStatus::Ok);
    assert!((first.angular_momentum - last.angular_momentum).abs() < 1e-8);
    assert_eq!(unsafe { nf_trace_sample(tr, n, &mut last) }, NfStatus::InvalidArgument);
    unsafe {
        nf_trace_free(tr);
        nf_family_free(fam);
    }
}

#[test]
fn non_unit_start_is_rejected() {
    let fam = warped_flat();
    let s = NfState { z: 0.0, y: 0.0, xi: 3.0, eta: 0.0 };
    let mut tr = ptr::NonNull::<NfTrace>::dangling().as_ptr();
    let st = unsafe { nf_integrate_to_level(fam, 0.1, &s, 1.0, 10.0, 1e-10, &mut tr) };
    assert_ne!(st, NfStatus::Ok);
    assert!(tr.is_null());
    unsafe { nf_family_free(fam) };
}

#[test]
fn winding_constant_matches_the_library() {
    let mut c = 0.0;
    assert_eq!(unsafe { nf_winding_constant(0.9, 4.0, 2, &mut c) }, NfStatus::Ok);
    let direct = winding_constant(0.9, &ScalingFunction::power(4.0).unwrap(), 2).unwrap().value;
    assert_eq!(c, direct);
}

#[test]
fn experiment_runs_and_writes_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        CString::new(r#"{"experiment":"eigencheck","metric":{"variant":"morse_model","k":2,"delta":0.7}}"#).unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { nf_run_experiment(cfg.as_ptr(), out.as_ptr(), 1) }, NfStatus::Ok, "{}", last_error());
    assert!(dir.path().join("summary.json").is_file());

    let broken = CString::new(r#"{"experiment":"eigencheck","metric":{"variant":"nope"}}"#).unwrap();
    assert_eq!(unsafe { nf_run_experiment(broken.as_ptr(), out.as_ptr(), 1) }, NfStatus::InvalidArgument);
    assert!(last_error().contains("configuration"));
}
