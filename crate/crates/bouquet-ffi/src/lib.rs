//! C ABI over `bouquet-lab`.
//!
//! Every fallible call returns a [`BqStatus`]; on failure a message is kept
//! per thread and can be read with [`bq_last_error`]. Handles are opaque and
//! must be released with their `_free` function. Panics never cross the
//! boundary; they surface as `BQ_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bouquet_lab::error::Error;
use bouquet_lab::family::{Family, FamilyParams};
use bouquet_lab::geometry::{strip_index, RegionLabel, RegionScheme};
use bouquet_lab::hair::{hair_point, DEFAULT_N_MAX};
use bouquet_lab::symbolic::{dynamics_scheme, periodic_point_with, Branches, ItinerarySpec};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Overflow = 3,
    Boundary = 4,
    NonConvergence = 5,
    BranchViolation = 6,
    CoverageViolation = 7,
    Numerical = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BqComplex {
    pub re: f64,
    pub im: f64,
}

impl From<BqComplex> for Complex64 {
    fn from(z: BqComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for BqComplex {
    fn from(z: Complex64) -> Self {
        BqComplex { re: z.re, im: z.im }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BqRegionKind {
    Polygon = 0,
    Strip = 1,
    Sector = 2,
    Boundary = 3,
}

/// Opaque family member with its inverse-branch solver.
pub struct BqFamily {
    family: Family,
    branches: Branches,
}

/// Opaque region scheme.
pub struct BqScheme {
    scheme: RegionScheme,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(BqStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Overflow { .. } => BqStatus::Overflow,
            Error::InvalidParams(_) | Error::Degenerate(_) | Error::Json(_) | Error::RTooSmall { .. } => {
                BqStatus::InvalidArgument
            }
            Error::Boundary { .. } => BqStatus::Boundary,
            Error::NonConvergence { .. } => BqStatus::NonConvergence,
            Error::BranchViolation(_) => BqStatus::BranchViolation,
            Error::CoverageViolation(_) => BqStatus::CoverageViolation,
            _ => BqStatus::Numerical,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BqStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BqStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BqStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or points to a live, properly aligned value of type `T`.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` is null or valid for writes of one `T`.
unsafe fn put<T>(p: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// # Safety
/// `digits` points to `len` readable values.
unsafe fn word(digits: *const i64, len: usize) -> Result<Vec<i64>, Fail> {
    if digits.is_null() {
        return Err(null("digits"));
    }
    if len == 0 {
        return Err(Fail(BqStatus::InvalidArgument, "empty itinerary".into()));
    }
    Ok(std::slice::from_raw_parts(digits, len).to_vec())
}

/// Message of the last failure on this thread; valid until the next failing
/// call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn bq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates the member f = λ Σ exp(ω^k z) with p terms.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn bq_family_new(p: usize, lambda: f64, out: *mut *mut BqFamily) -> BqStatus {
    guard(|| {
        let family = Family::new(FamilyParams::new(p, lambda)?)?;
        let branches = Branches::new(&family);
        put(out, Box::into_raw(Box::new(BqFamily { family, branches })), "out")
    })
}

/// # Safety
/// `fam` is null or a handle from `bq_family_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bq_family_free(fam: *mut BqFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

/// # Safety
/// `fam` is null or a live handle; `out` is null or valid for one write.
unsafe fn eval(
    fam: *const BqFamily,
    z: BqComplex,
    out: *mut BqComplex,
    op: fn(&Family, Complex64) -> bouquet_lab::error::Result<Complex64>,
) -> BqStatus {
    guard(|| {
        let f = deref(fam, "fam")?;
        put(out, op(&f.family, z.into())?.into(), "out")
    })
}

/// f(z).
///
/// # Safety
/// `fam` is a live handle; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bq_family_f(fam: *const BqFamily, z: BqComplex, out: *mut BqComplex) -> BqStatus {
    eval(fam, z, out, Family::f)
}

/// f'(z).
///
/// # Safety
/// `fam` is a live handle; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bq_family_f_prime(fam: *const BqFamily, z: BqComplex, out: *mut BqComplex) -> BqStatus {
    eval(fam, z, out, Family::f_prime)
}

/// ε(z) = Σ_{k≥1} exp((ω^k − 1) z), so that f = λ e^z (1 + ε).
///
/// # Safety
/// `fam` is a live handle; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bq_family_epsilon(fam: *const BqFamily, z: BqComplex, out: *mut BqComplex) -> BqStatus {
    eval(fam, z, out, Family::epsilon)
}

/// M(r, f) = max over |z| = r of |f(z)|.
///
/// # Safety
/// `fam` is a live handle; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bq_family_max_modulus(fam: *const BqFamily, r: f64, out: *mut f64) -> BqStatus {
    guard(|| {
        let f = deref(fam, "fam")?;
        put(out, f.family.max_modulus(r, 1e-12)?, "out")
    })
}

/// log M(r, f), finite for any finite r > 0.
///
/// # Safety
/// `fam` is a live handle; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bq_family_log_max_modulus(fam: *const BqFamily, r: f64, out: *mut f64) -> BqStatus {
    guard(|| {
        let f = deref(fam, "fam")?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Fail(BqStatus::InvalidArgument, format!("radius must be positive, got {r}")));
        }
        put(out, f.family.log_max_modulus(r, 1e-12), "out")
    })
}

/// Inverse branch L_j: the solution of f(z) = w in the strip R(j) on the
/// dominant side of V_0.
///
/// # Safety
/// `fam` is a live handle; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bq_inverse_branch(fam: *const BqFamily, w: BqComplex, j: i64, out: *mut BqComplex) -> BqStatus {
    guard(|| {
        let f = deref(fam, "fam")?;
        put(out, f.branches.apply(w.into(), j, None)?.into(), "out")
    })
}

/// Hair point h_s(t) for the periodic itinerary `digits[0..len]`.
///
/// # Safety
/// `fam` is a live handle; `digits` points to `len` values; `out` is valid
/// for one write.
#[no_mangle]
pub unsafe extern "C" fn bq_hair_point(
    fam: *const BqFamily,
    digits: *const i64,
    len: usize,
    t: f64,
    out: *mut BqComplex,
) -> BqStatus {
    guard(|| {
        let f = deref(fam, "fam")?;
        let w = word(digits, len)?;
        let bound = w.iter().map(|s| s.unsigned_abs()).max().unwrap_or(1) as u32;
        let s = ItinerarySpec::periodic(w, bound)?;
        put(out, hair_point(&f.branches, &s, t, 1e-12, DEFAULT_N_MAX)?.z.into(), "out")
    })
}

/// Scheme with default constants for (p, λ).
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn bq_scheme_new(p: usize, lambda: f64, out: *mut *mut BqScheme) -> BqStatus {
    guard(|| {
        let scheme = RegionScheme::defaults(FamilyParams::new(p, lambda)?)?;
        put(out, Box::into_raw(Box::new(BqScheme { scheme })), "out")
    })
}

/// Scheme whose c is calibrated for symbolic dynamics on `k_bound` symbols.
///
/// # Safety
/// `scheme` is a live handle; `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn bq_scheme_dynamics(scheme: *const BqScheme, k_bound: u32, out: *mut *mut BqScheme) -> BqStatus {
    guard(|| {
        let s = deref(scheme, "scheme")?;
        if k_bound == 0 {
            return Err(Fail(BqStatus::InvalidArgument, "K must be at least 1".into()));
        }
        let scheme = dynamics_scheme(&s.scheme, k_bound)?;
        put(out, Box::into_raw(Box::new(BqScheme { scheme })), "out")
    })
}

/// Parses and validates a scheme from its JSON document.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn bq_scheme_from_json(json: *const c_char, out: *mut *mut BqScheme) -> BqStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(BqStatus::InvalidArgument, e.to_string()))?;
        let scheme = RegionScheme::from_json(text)?;
        scheme.validate()?;
        put(out, Box::into_raw(Box::new(BqScheme { scheme })), "out")
    })
}

/// # Safety
/// `scheme` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bq_scheme_free(scheme: *mut BqScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// JSON document of the scheme; release with `bq_string_free`.
///
/// # Safety
/// `scheme` is a live handle; `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn bq_scheme_to_json(scheme: *const BqScheme, out: *mut *mut c_char) -> BqStatus {
    guard(|| {
        let s = deref(scheme, "scheme")?;
        let c = CString::new(s.scheme.to_json()).map_err(|e| Fail(BqStatus::Numerical, e.to_string()))?;
        put(out, c.into_raw(), "out")
    })
}

/// The constant c of the scheme.
///
/// # Safety
/// `scheme` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn bq_scheme_c(scheme: *const BqScheme) -> f64 {
    scheme.as_ref().map_or(f64::NAN, |s| s.scheme.c)
}

/// # Safety
/// `s` is null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Region of z: polygon, strip Q_k, sector T_j, or boundary. The index is 0
/// for the polygon and the boundary.
///
/// # Safety
/// `scheme` is a live handle; the out pointers are valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bq_classify(
    scheme: *const BqScheme,
    z: BqComplex,
    out_kind: *mut BqRegionKind,
    out_index: *mut usize,
) -> BqStatus {
    guard(|| {
        let s = deref(scheme, "scheme")?;
        let (kind, index) = match s.scheme.classify_point(z.into()) {
            RegionLabel::Polygon => (BqRegionKind::Polygon, 0),
            RegionLabel::Strip(k) => (BqRegionKind::Strip, k),
            RegionLabel::Sector(j) => (BqRegionKind::Sector, j),
            RegionLabel::Boundary => (BqRegionKind::Boundary, 0),
        };
        put(out_kind, kind, "out_kind")?;
        put(out_index, index, "out_index")
    })
}

/// k with (2k−1)π < Im z < (2k+1)π; `BQ_STATUS_BOUNDARY` on a strip edge.
///
/// # Safety
/// `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bq_strip_index(z: BqComplex, out: *mut i64) -> BqStatus {
    guard(|| put(out, strip_index(z.into())?, "out"))
}

/// Periodic point z(s) of the pure period `digits[0..len]`, with its cycle
/// multiplier and the extended-precision closure residual |f^n(z) − z|.
/// Use a scheme from `bq_scheme_dynamics`.
///
/// # Safety
/// Handles are live; `digits` points to `len` values; out pointers are valid
/// for one write each (`out_multiplier` and `out_residual` may be null).
#[no_mangle]
pub unsafe extern "C" fn bq_periodic_point(
    fam: *const BqFamily,
    scheme: *const BqScheme,
    digits: *const i64,
    len: usize,
    out_z: *mut BqComplex,
    out_multiplier: *mut BqComplex,
    out_residual: *mut f64,
) -> BqStatus {
    guard(|| {
        let f = deref(fam, "fam")?;
        let s = deref(scheme, "scheme")?;
        if f.family.params() != s.scheme.params() {
            return Err(Fail(BqStatus::InvalidArgument, "family and scheme parameters differ".into()));
        }
        let rec = periodic_point_with(&f.branches, &s.scheme, &word(digits, len)?, 1e-14)?;
        put(out_z, rec.z.into(), "out_z")?;
        if !out_multiplier.is_null() {
            out_multiplier.write(rec.multiplier.into());
        }
        if !out_residual.is_null() {
            out_residual.write(rec.closure_residual);
        }
        Ok(())
    })
}
