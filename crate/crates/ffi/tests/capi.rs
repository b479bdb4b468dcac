use std::ffi::CStr;
use std::ptr;

use tracedist_ffi::*;

fn make(f: impl FnOnce(*mut *mut TdState) -> TdStatus) -> *mut TdState {
    let mut out = ptr::null_mut();
    assert_eq!(f(&mut out), TdStatus::Ok);
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = td_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn vacuum_against_thermal() {
    unsafe {
        let vac = make(|o| td_state_vacuum(1, 2.0, o));
        let th = make(|o| td_state_thermal(1.0, 2.0, o));
        let mut est = TdEstimate::default();
        assert_eq!(td_trace_distance_pure_mixed(vac, th, 10, &mut est), TdStatus::Ok);
        assert!((est.value - 0.5).abs() < 1e-12);
        assert_eq!(est.breakdown_step, 1);
        let mut oracle = 0.0;
        assert_eq!(td_fock_trace_distance(vac, th, 100, &mut oracle), TdStatus::Ok);
        assert!((oracle - 0.5).abs() < 1e-9);
        td_state_free(vac);
        td_state_free(th);
    }
}

#[test]
fn raw_constructor_and_moments() {
    unsafe {
        let r = [0.3, -0.2];
        let v = [1.5, 0.2, 0.2, 1.1];
        let s = make(|o| td_state_new(2.0, 1, r.as_ptr(), v.as_ptr(), o));
        assert_eq!(td_state_num_modes(s), 1);
        let (mut r2, mut v2) = ([0.0; 2], [0.0; 4]);
        assert_eq!(td_state_moments(s, r2.as_mut_ptr(), v2.as_mut_ptr()), TdStatus::Ok);
        assert_eq!((r2, v2), (r, v));
        td_state_free(s);

        let bad = [0.5, 0.0, 0.0, 0.5];
        let mut out = ptr::null_mut();
        assert_eq!(td_state_new(2.0, 1, r.as_ptr(), bad.as_ptr(), &mut out), TdStatus::Domain);
        assert!(out.is_null());
        assert!(last_error().contains("uncertainty"));
    }
}

#[test]
fn pure_pure_and_loss() {
    unsafe {
        let sq = make(|o| td_state_squeezed(0.5, 0.0, 0.0, 2.0, o));
        let vac = make(|o| td_state_vacuum(1, 2.0, o));
        let mut d = 0.0;
        assert_eq!(td_pure_pure_distance(sq, vac, &mut d), TdStatus::Ok);
        assert!((d - (1.0 - 1.0 / 0.5f64.cosh()).sqrt()).abs() < 1e-12);

        let lossy = make(|o| td_state_loss(sq, 0.4, o));
        assert_eq!(td_pure_pure_distance(lossy, vac, &mut d), TdStatus::Domain);
        let mut est = TdEstimate::default();
        assert_eq!(td_trace_distance_pure_mixed(lossy, sq, 5, &mut est), TdStatus::Domain);
        assert!(last_error().contains("pure"));
        for s in [sq, vac, lossy] {
            td_state_free(s);
        }
    }
}

#[test]
fn lower_bound_below_oracle() {
    unsafe {
        let plus = make(|o| td_state_squeezed(0.3, 0.8, 0.0, 2.0, o));
        let minus = make(|o| td_state_squeezed(0.3, -0.8, 0.0, 2.0, o));
        let (p, m) = (make(|o| td_state_loss(plus, 0.6, o)), make(|o| td_state_loss(minus, 0.6, o)));
        let trial = make(|o| td_state_coherent(0.75, 0.75, 2.0, o));
        let mut est = TdEstimate::default();
        assert_eq!(td_trace_distance_lower_bound(p, m, trial, 5, &mut est), TdStatus::Ok);
        let mut oracle = 0.0;
        assert_eq!(td_fock_trace_distance(p, m, 100, &mut oracle), TdStatus::Ok);
        assert!(est.value > 0.0 && est.value <= oracle + 1e-6, "{} vs {oracle}", est.value);
        for s in [plus, minus, p, m, trial] {
            td_state_free(s);
        }
    }
}

#[test]
fn multivariate_trace_of_pair_is_overlap() {
    unsafe {
        let a = make(|o| td_state_coherent(1.0, 0.0, 2.0, o));
        let b = make(|o| td_state_vacuum(1, 2.0, o));
        let list = [a as *const TdState, b as *const TdState];
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(td_multivariate_trace(list.as_ptr(), 2, &mut re, &mut im), TdStatus::Ok);
        assert!((re - (-1.0f64).exp()).abs() < 1e-12 && im.abs() < 1e-12);
        td_state_free(a);
        td_state_free(b);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        let mut d = 0.0;
        assert_eq!(td_pure_pure_distance(ptr::null(), ptr::null(), &mut d), TdStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(td_state_vacuum(1, 2.0, ptr::null_mut()), TdStatus::NullPointer);
        assert_eq!(td_state_num_modes(ptr::null()), 0);
        td_state_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(td_state_thermal(-1.0, 2.0, &mut out), TdStatus::Domain);
        assert_eq!(td_state_vacuum(0, 2.0, &mut out), TdStatus::Shape);
        let a = make(|o| td_state_vacuum(1, 2.0, o));
        let b = make(|o| td_state_vacuum(2, 2.0, o));
        let mut d = 0.0;
        assert_eq!(td_pure_pure_distance(a, b, &mut d), TdStatus::Shape);
        td_state_free(a);
        td_state_free(b);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/tracedist.h");
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99", "-Wall", "-Werror", header])
        .status()
    else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(status.success());
}
