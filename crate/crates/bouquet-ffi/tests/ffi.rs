use std::ffi::CStr;
use std::ptr;

use bouquet_ffi::*;

fn family(p: usize) -> *mut BqFamily {
    let mut fam = ptr::null_mut();
    assert_eq!(unsafe { bq_family_new(p, 1.0, &mut fam) }, BqStatus::Ok);
    assert!(!fam.is_null());
    fam
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bq_last_error()) }.to_string_lossy().into_owned()
}

fn c(re: f64, im: f64) -> BqComplex {
    BqComplex { re, im }
}

#[test]
fn family_evaluation_matches_closed_form() {
    let fam = family(3);
    let mut out = c(0.0, 0.0);
    unsafe {
        assert_eq!(bq_family_f(fam, c(0.0, 0.0), &mut out), BqStatus::Ok);
        assert!((out.re - 3.0).abs() < 1e-15 && out.im.abs() < 1e-15);
        assert_eq!(bq_family_f_prime(fam, c(0.0, 0.0), &mut out), BqStatus::Ok);
        assert!(out.re.abs() < 1e-15 && out.im.abs() < 1e-15);
        assert_eq!(bq_family_epsilon(fam, c(30.0, 0.0), &mut out), BqStatus::Ok);
        assert!(out.re.abs() < 1e-18);
        let mut m = 0.0;
        assert_eq!(bq_family_max_modulus(fam, 2.0, &mut m), BqStatus::Ok);
        let mut f2 = c(0.0, 0.0);
        bq_family_f(fam, c(2.0, 0.0), &mut f2);
        assert!(m >= f2.re * (1.0 - 1e-12));
        let mut lm = 0.0;
        assert_eq!(bq_family_log_max_modulus(fam, 1e4, &mut lm), BqStatus::Ok);
        assert!((lm - 1e4).abs() < 1.0);
        bq_family_free(fam);
    }
}

#[test]
fn invalid_arguments_report_status_and_message() {
    let mut fam = ptr::null_mut();
    assert_eq!(unsafe { bq_family_new(2, 1.0, &mut fam) }, BqStatus::InvalidArgument);
    assert!(fam.is_null());
    assert!(last_error().contains("p must be at least 3"), "{}", last_error());
    let mut out = c(0.0, 0.0);
    assert_eq!(unsafe { bq_family_f(ptr::null(), c(0.0, 0.0), &mut out) }, BqStatus::NullPointer);
    let mut k = 0;
    assert_eq!(unsafe { bq_strip_index(c(0.0, std::f64::consts::PI), &mut k) }, BqStatus::Boundary);
    assert_eq!(unsafe { bq_strip_index(c(0.0, 2.0 * std::f64::consts::PI), &mut k) }, BqStatus::Ok);
    assert_eq!(k, 1);
}

#[test]
fn scheme_json_round_trip_and_classification() {
    let mut scheme = ptr::null_mut();
    unsafe {
        assert_eq!(bq_scheme_new(3, 1.0, &mut scheme), BqStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(bq_scheme_to_json(scheme, &mut json), BqStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(bq_scheme_from_json(json, &mut back), BqStatus::Ok);
        assert_eq!(bq_scheme_c(back), bq_scheme_c(scheme));
        bq_string_free(json);

        let mut kind = BqRegionKind::Boundary;
        let mut index = 99;
        assert_eq!(bq_classify(scheme, c(0.0, 0.0), &mut kind, &mut index), BqStatus::Ok);
        assert_eq!(kind, BqRegionKind::Polygon);
        assert_eq!(bq_classify(scheme, c(1e3, 0.0), &mut kind, &mut index), BqStatus::Ok);
        assert_eq!((kind, index), (BqRegionKind::Sector, 0));

        let bad = c"{\"p\": 3, \"lambda\": 1.0, \"sigma\": 0.0625, \"eta\": 67.2, \"tau\": 1.0, \"nu\": 12.0, \"c\": 5.0, \"safety\": 1.05}";
        let mut rejected = ptr::null_mut();
        assert_eq!(bq_scheme_from_json(bad.as_ptr(), &mut rejected), BqStatus::InvalidArgument);
        assert!(last_error().contains("tau"));
        bq_scheme_free(back);
        bq_scheme_free(scheme);
    }
}

#[test]
fn inverse_branch_periodic_point_and_hair() {
    let fam = family(3);
    unsafe {
        let w = c(1e6, 3e5);
        let mut z = c(0.0, 0.0);
        assert_eq!(bq_inverse_branch(fam, w, 2, &mut z), BqStatus::Ok);
        let mut fz = c(0.0, 0.0);
        bq_family_f(fam, z, &mut fz);
        assert!(((fz.re - w.re).powi(2) + (fz.im - w.im).powi(2)).sqrt() < 1e-9 * 1.05e6);

        let mut base = ptr::null_mut();
        let mut dynamics = ptr::null_mut();
        assert_eq!(bq_scheme_new(3, 1.0, &mut base), BqStatus::Ok);
        assert_eq!(bq_scheme_dynamics(base, 3, &mut dynamics), BqStatus::Ok);
        let digits = [2i64];
        let mut zp = c(0.0, 0.0);
        let mut mult = c(0.0, 0.0);
        let mut res = 1.0;
        assert_eq!(
            bq_periodic_point(fam, dynamics, digits.as_ptr(), 1, &mut zp, &mut mult, &mut res),
            BqStatus::Ok
        );
        assert!(res < 1e-9);
        assert!(mult.re.hypot(mult.im) > 1.0);

        let mut h = c(0.0, 0.0);
        assert_eq!(bq_hair_point(fam, digits.as_ptr(), 1, 1.0, &mut h), BqStatus::Ok);
        assert!((h.re - zp.re).hypot(h.im - zp.im) < 1e-8);
        assert_eq!(bq_hair_point(fam, digits.as_ptr(), 0, 1.0, &mut h), BqStatus::InvalidArgument);
        assert_eq!(bq_hair_point(fam, digits.as_ptr(), 1, 0.5, &mut h), BqStatus::InvalidArgument);

        bq_scheme_free(dynamics);
        bq_scheme_free(base);
        bq_family_free(fam);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(bq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bouquet_lab.h")).unwrap();
    for name in [
        "bq_family_new", "bq_family_free", "bq_family_f", "bq_family_f_prime", "bq_family_epsilon",
        "bq_family_max_modulus", "bq_family_log_max_modulus", "bq_inverse_branch", "bq_hair_point",
        "bq_scheme_new", "bq_scheme_dynamics", "bq_scheme_from_json", "bq_scheme_free", "bq_scheme_to_json",
        "bq_scheme_c", "bq_string_free", "bq_classify", "bq_strip_index", "bq_periodic_point",
        "bq_last_error", "bq_version",
    ] {
        let declared = header.contains(&format!(" {name}(")) || header.contains(&format!("*{name}("));
        assert!(declared, "{name} missing from header");
    }
    // syntax-check with the system C compiler when one is present
    if let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bouquet_lab.h"))
        .status()
    {
        assert!(status.success());
    }
}
