use std::ffi::CStr;
use std::ptr;

use gsa_dof_ffi::*;

#[test]
fn bounds_round_trip() {
    let mut r = GsaRational { num: 0, den: 0 };
    assert_eq!(unsafe { gsa_upper_bound(5, 10, 21, &mut r) }, GsaStatus::Ok);
    assert_eq!(r, GsaRational { num: 420, den: 11 });
    assert_eq!(unsafe { gsa_achievable_dof(4, 3, 7, &mut r) }, GsaStatus::Ok);
    assert_eq!(r, GsaRational { num: 12, den: 1 });

    let mut kind = GsaRegimeKind::RelayLimited;
    let mut beta = 99;
    assert_eq!(unsafe { gsa_regime(5, 4, 13, &mut kind, &mut beta) }, GsaStatus::Ok);
    assert_eq!((kind, beta), (GsaRegimeKind::Slope, 3));
}

#[test]
fn errors_set_status_and_message() {
    let mut r = GsaRational { num: 0, den: 0 };
    assert_eq!(unsafe { gsa_upper_bound(2, 1, 1, &mut r) }, GsaStatus::InvalidArgument);
    assert!(last_error_message().unwrap().contains("K = 2"));
    assert_eq!(unsafe { gsa_upper_bound(4, 1, 1, ptr::null_mut()) }, GsaStatus::NullPointer);

    let mut h = ptr::null_mut();
    assert_eq!(unsafe { gsa_scheme_synthesize(5, 4, 13, 9, 1, &mut h) }, GsaStatus::InvalidArgument);
    assert!(h.is_null());
    assert_eq!(unsafe { gsa_scheme_verify(ptr::null(), ptr::null_mut()) }, GsaStatus::NullPointer);
}

#[test]
fn scheme_lifecycle() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { gsa_scheme_synthesize(4, 3, 7, 2, 1, &mut h) }, GsaStatus::Ok);
    assert!(!h.is_null());

    let (mut t, mut d, mut res, mut cond) = (0u64, 0usize, 1.0f64, 0.0f64);
    assert_eq!(unsafe { gsa_scheme_info(h, &mut t, &mut d, &mut res, &mut cond) }, GsaStatus::Ok);
    assert_eq!((t, d), (1, 12));
    assert!(res <= 1e-8 && cond < 1e8);

    let mut ok = false;
    assert_eq!(unsafe { gsa_scheme_verify(h, &mut ok) }, GsaStatus::Ok);
    assert!(ok);

    let (mut re, mut ue) = (1.0, 1.0);
    assert_eq!(unsafe { gsa_scheme_simulate(h, 0.0, &mut re, &mut ue) }, GsaStatus::Ok);
    assert!(re <= 1e-6 && ue <= 1e-6);

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { gsa_scheme_to_json(h, &mut s) }, GsaStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { gsa_string_free(s) };
    assert!(text.contains("\"precoders\""));

    unsafe { gsa_scheme_free(h) };
    unsafe { gsa_scheme_free(ptr::null_mut()) };
}

#[test]
fn extension_through_the_abi() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { gsa_scheme_synthesize(5, 1, 3, 2, 4, &mut h) }, GsaStatus::Ok);
    let mut t = 0u64;
    assert_eq!(
        unsafe { gsa_scheme_info(h, &mut t, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) },
        GsaStatus::Ok
    );
    assert_eq!(t, 5);
    unsafe { gsa_scheme_free(h) };
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/gsa_dof.h");
    for name in [
        "gsa_upper_bound",
        "gsa_achievable_dof",
        "gsa_regime",
        "gsa_scheme_synthesize",
        "gsa_scheme_free",
        "gsa_scheme_to_json",
        "gsa_string_free",
        "gsa_last_error",
        "GSA_STATUS_OK",
        "typedef struct GsaScheme GsaScheme",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
