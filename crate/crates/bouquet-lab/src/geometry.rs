//! Plane partition into the polygon P(ν), the strips Q_k and the sectors T_j(ν),
//! plus the rectangles, trapeziums and half-strips used by the other modules.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmath::{carg, PI, TAU};
use crate::error::{Error, Result};
use crate::family::{Family, FamilyParams};

/// Absolute distance under which a point counts as lying on a frontier.
pub const BOUNDARY_TOL: f64 = 1e-12;

pub const DEFAULT_SIGMA: f64 = 1.0 / 16.0;
pub const DEFAULT_SAFETY: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionScheme {
    pub p: usize,
    pub lambda: f64,
    pub sigma: f64,
    pub eta: f64,
    pub tau: f64,
    pub nu: f64,
    pub c: f64,
    pub safety: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeOverrides {
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    pub tau: Option<f64>,
    pub nu: Option<f64>,
    pub c: Option<f64>,
    pub safety: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index")]
pub enum RegionLabel {
    Polygon,
    Strip(usize),
    Sector(usize),
    Boundary,
}

/// Smallest admissible strip half-width for given p and η.
pub fn tau_bound(p: usize, eta: f64) -> f64 {
    libm::log(4.0 * p as f64 * eta) / (2.0 * libm::sin(PI / p as f64))
}

/// Strip index k with (2k−1)π < Im z < (2k+1)π.
pub fn strip_index(z: Complex64) -> Result<i64> {
    let k = libm::floor((z.im + PI) / TAU) as i64;
    for edge in [2 * k - 1, 2 * k + 1] {
        if (z.im - edge as f64 * PI).abs() < BOUNDARY_TOL {
            return Err(Error::Boundary { im: z.im });
        }
    }
    Ok(k)
}

/// Membership in the closure of R(k), up to `tol`.
pub fn in_closed_strip(z: Complex64, k: i64, tol: f64) -> bool {
    let lo = (2 * k - 1) as f64 * PI;
    let hi = (2 * k + 1) as f64 * PI;
    z.im >= lo - tol && z.im <= hi + tol
}

/// Geometry helper shared by the scheme and the ν search.
struct Partition<'a> {
    family: &'a Family,
    tau: f64,
    nu: f64,
}

#[derive(PartialEq)]
enum Side {
    Inside,
    Near,
    Outside,
}

impl Partition<'_> {
    fn poly_value(&self, z: Complex64) -> f64 {
        self.family
            .roots()
            .iter()
            .map(|w| (z * w.conj()).re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn strip_side(&self, z: Complex64, k: usize) -> Side {
        let w = z * self.family.ray_dir(k).conj();
        let tol = BOUNDARY_TOL;
        if w.re > tol && w.im.abs() < self.tau - tol {
            Side::Inside
        } else if (w.re > -tol && (w.im.abs() - self.tau).abs() <= tol)
            || (w.re.abs() <= tol && w.im.abs() <= self.tau + tol)
        {
            Side::Near
        } else {
            Side::Outside
        }
    }

    fn classify(&self, z: Complex64) -> RegionLabel {
        let pv = self.poly_value(z);
        if pv < self.nu - BOUNDARY_TOL {
            return RegionLabel::Polygon;
        }
        if (pv - self.nu).abs() <= BOUNDARY_TOL {
            return RegionLabel::Boundary;
        }
        let p = self.family.p();
        let mut inside = None;
        for k in 0..p {
            match self.strip_side(z, k) {
                Side::Near => return RegionLabel::Boundary,
                Side::Inside => inside = inside.or(Some(k)),
                Side::Outside => {}
            }
        }
        if let Some(k) = inside {
            return RegionLabel::Strip(k);
        }
        // T_j sits at angle -2πj/p
        let j = libm::round(-carg(z) * p as f64 / TAU) as i64;
        RegionLabel::Sector(j.rem_euclid(p as i64) as usize)
    }

    fn in_t0_closure(&self, z: Complex64) -> bool {
        match self.classify(z) {
            RegionLabel::Sector(0) => true,
            RegionLabel::Boundary => {
                let p = self.family.p();
                carg(z).abs() < PI / p as f64
                    && self.poly_value(z) >= self.nu - BOUNDARY_TOL
                    && (0..p).all(|k| self.strip_side(z, k) != Side::Inside)
            }
            _ => false,
        }
    }

    /// Points on the frontier of T_0(ν): the polygon edge and the two strip sides.
    fn t0_boundary(&self, n: usize) -> Vec<Complex64> {
        let n = n.max(8);
        let per = n / 3;
        let ray = self.family.ray_dir(0);
        let t = self.family.tan_half();
        let far = 10.0 * self.nu;
        let mut pts = Vec::with_capacity(n);
        for i in 0..per {
            let y = -self.nu * t + 2.0 * self.nu * t * (i as f64 + 0.5) / per as f64;
            let z = Complex64::new(self.nu, y);
            if self.in_t0_closure(z) {
                pts.push(z);
            }
        }
        let rest = (n - pts.len()) / 2;
        for i in 0..rest.max(1) {
            let s = far * (i as f64 + 0.5) / rest.max(1) as f64;
            let z = ray * Complex64::new(s, -self.tau);
            if self.poly_value(z) >= self.nu {
                pts.push(z);
                pts.push(z.conj());
            }
        }
        pts
    }

    /// Polar mesh of T_0(ν) for radii in [ν, 6ν].
    fn t0_interior(&self, n: usize) -> Vec<Complex64> {
        let side = (n as f64).sqrt().ceil().max(4.0) as usize;
        let a = PI / self.family.p() as f64;
        let mut pts = Vec::new();
        for i in 0..side {
            let r = self.nu * (1.0 + 5.0 * (i as f64 + 0.5) / side as f64);
            for j in 0..side {
                let th = -a + 2.0 * a * (j as f64 + 0.5) / side as f64;
                let (s, c) = libm::sincos(th);
                let z = Complex64::new(r * c, r * s);
                if self.classify(z) == RegionLabel::Sector(0) {
                    pts.push(z);
                }
            }
        }
        pts
    }

    /// Sampled |e^z| ≥ 4pη|exp(ω^k z)| on T_0(ν).
    fn dominance_holds(&self, eta: f64, n: usize) -> bool {
        let p = self.family.p();
        let bound = libm::log(4.0 * p as f64 * eta);
        let slack = 1e-9 * (1.0 + bound);
        let mut pts = self.t0_boundary(n);
        pts.extend(self.t0_interior(n));
        pts.iter().all(|&z| {
            (1..p).all(|k| z.re - (self.family.root(k as i64) * z).re >= bound - slack)
        })
    }
}

pub fn make_region_scheme(params: FamilyParams, ov: &SchemeOverrides) -> Result<RegionScheme> {
    let scheme = assemble_scheme(params, ov)?;
    let bad = scheme.invariant_violations();
    if !bad.is_empty() {
        return Err(Error::InvalidParams(bad.join("; ")));
    }
    Ok(scheme)
}

/// Fills in defaults around the overrides without checking the invariants,
/// so that a verifier can report which ones a tampered scheme breaks.
pub fn assemble_scheme(params: FamilyParams, ov: &SchemeOverrides) -> Result<RegionScheme> {
    params.validate()?;
    let family = Family::new(params)?;
    let p = params.p;
    let safety = ov.safety.unwrap_or(DEFAULT_SAFETY);
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(Error::InvalidParams(format!("safety must be >= 1, got {safety}")));
    }
    let sigma = ov.sigma.unwrap_or(DEFAULT_SIGMA);
    let eta = ov.eta.unwrap_or(safety * 4.0 / sigma);
    let tau = ov.tau.unwrap_or_else(|| tau_bound(p, eta));
    let nu = match ov.nu {
        Some(nu) => nu,
        // a tau below its bound admits no nu; keep the one valid at the bound
        // so the invariant check can name the violation
        None => search_nu(&family, eta, tau, safety)
            .or_else(|_| search_nu(&family, eta, tau.max(tau_bound(p, eta)), safety))?,
    };
    let c_min = safety * tau / family.sin_half();
    let c = ov.c.map_or(c_min, |c| c.max(c_min));
    Ok(RegionScheme {
        p,
        lambda: params.lambda,
        sigma,
        eta,
        tau,
        nu,
        c,
        safety,
    })
}

const NU_SAMPLES: usize = 3000;

fn search_nu(family: &Family, eta: f64, tau: f64, safety: f64) -> Result<f64> {
    let holds = |nu: f64| Partition { family, tau, nu }.dominance_holds(eta, NU_SAMPLES);
    let mut hi = (tau * family.p() as f64).max(1.0);
    let mut lo = None;
    while !holds(hi) {
        lo = Some(hi);
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::InvalidParams("no admissible nu below 1e8".into()));
        }
    }
    if let Some(mut lo) = lo {
        while (hi - lo) > 0.01 * hi {
            let mid = 0.5 * (lo + hi);
            if holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    Ok(hi * safety)
}

impl RegionScheme {
    pub fn params(&self) -> FamilyParams {
        FamilyParams {
            p: self.p,
            lambda: self.lambda,
        }
    }

    pub fn family(&self) -> Result<Family> {
        Family::new(self.params())
    }

    pub fn defaults(params: FamilyParams) -> Result<Self> {
        make_region_scheme(params, &SchemeOverrides::default())
    }

    /// Same scheme with a different c (at least the minimal admissible one).
    pub fn with_c(&self, c: f64) -> Self {
        let c_min = self.safety * self.tau / libm::sin(PI / self.p as f64);
        RegionScheme {
            c: c.max(c_min),
            ..*self
        }
    }

    /// Human readable list of violated invariants; empty when valid.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if let Err(e) = self.params().validate() {
            bad.push(e.to_string());
            return bad;
        }
        let s_max = 1.0 / (8.0 * 2f64.sqrt());
        if !(self.sigma > 0.0 && self.sigma < s_max) {
            bad.push(format!("sigma = {} outside (0, {s_max})", self.sigma));
        }
        if !(self.eta > 4.0 / self.sigma) {
            bad.push(format!("eta = {} not above 4/sigma = {}", self.eta, 4.0 / self.sigma));
        }
        let tb = tau_bound(self.p, self.eta);
        if !(self.tau >= tb * (1.0 - 1e-12)) {
            bad.push(format!("tau = {} below the bound {tb}", self.tau));
        }
        let c_min = self.tau / libm::sin(PI / self.p as f64);
        if !(self.c > c_min) {
            bad.push(format!("c = {} not above tau/sin(pi/p) = {c_min}", self.c));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            bad.push(format!("nu = {} is not positive", self.nu));
        } else if bad.is_empty() {
            let family = Family::new(self.params()).expect("validated");
            let part = Partition {
                family: &family,
                tau: self.tau,
                nu: self.nu,
            };
            if !part.dominance_holds(self.eta, NU_SAMPLES) {
                bad.push(format!("nu = {} fails the sampled dominance inequality", self.nu));
            }
        }
        bad
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self.invariant_violations();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad.join("; ")))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scheme serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    fn with_family<T>(&self, f: impl FnOnce(&Partition) -> T) -> T {
        let family = Family::new(self.params()).expect("scheme parameters are validated");
        f(&Partition {
            family: &family,
            tau: self.tau,
            nu: self.nu,
        })
    }

    pub fn classify_point(&self, z: Complex64) -> RegionLabel {
        self.with_family(|part| part.classify(z))
    }

    /// Classification reusing an existing family (no allocation).
    pub fn classify_with(&self, family: &Family, z: Complex64) -> RegionLabel {
        Partition {
            family,
            tau: self.tau,
            nu: self.nu,
        }
        .classify(z)
    }

    pub fn in_polygon(&self, family: &Family, z: Complex64) -> bool {
        Partition {
            family,
            tau: self.tau,
            nu: self.nu,
        }
        .poly_value(z)
            < self.nu
    }

    pub fn t0_boundary_samples(&self, n: usize) -> Vec<Complex64> {
        self.with_family(|part| part.t0_boundary(n))
    }

    pub fn t0_interior_samples(&self, n: usize) -> Vec<Complex64> {
        self.with_family(|part| part.t0_interior(n))
    }

    pub fn dominance_holds(&self, n: usize) -> bool {
        self.with_family(|part| part.dominance_holds(self.eta, n))
    }

    /// Horizontal offset of the long sides of D_m from V_0.
    pub fn rectangle_offset(&self) -> f64 {
        self.tau / libm::cos(PI / self.p as f64)
    }

    /// Vertices of D_m, counterclockwise, starting at C_m on the right translate.
    pub fn d_rectangle(&self, m: i64) -> Result<[Complex64; 4]> {
        if m < 1 {
            return Err(Error::Degenerate(format!("rectangle index must be >= 1, got {m}")));
        }
        let (s, c) = libm::sincos(PI / self.p as f64);
        let cot = c / s;
        let d = self.rectangle_offset();
        let corner = |mm: i64, delta: f64| {
            let base = mm as f64 * PI;
            Complex64::new(base * cot + s * s * delta, base - s * c * delta)
        };
        Ok([corner(m, d), corner(m + 1, d), corner(m + 1, -d), corner(m, -d)])
    }

    pub fn trapezium(&self, m: i64) -> Result<Trapezium> {
        Trapezium::new(self.p, m, self.c)
    }

    pub fn half_strip(&self, m: i64) -> HalfStrip {
        HalfStrip { m, c: self.c }
    }
}

/// Side labels of a trapezium: S1 on the ray, S2/S3 the horizontal sides, S4 at x = c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrapeziumSide {
    S1,
    S2,
    S3,
    S4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trapezium {
    pub m: i64,
    pub c: f64,
    pub cot: f64,
    /// Counterclockwise.
    pub vertices: [Complex64; 4],
}

impl Trapezium {
    pub fn new(p: usize, m: i64, c: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Degenerate("trapezium index must be nonzero".into()));
        }
        let cot = 1.0 / libm::tan(PI / p as f64);
        let am = m.abs();
        let need = (2 * am + 1) as f64 * PI * cot;
        if !(c > need) {
            return Err(Error::Degenerate(format!(
                "c = {c} must exceed (2|m|+1)π cot(π/p) = {need}"
            )));
        }
        let lo = (2 * am - 1) as f64 * PI;
        let hi = (2 * am + 1) as f64 * PI;
        let v = [
            Complex64::new(lo * cot, lo),
            Complex64::new(c, lo),
            Complex64::new(c, hi),
            Complex64::new(hi * cot, hi),
        ];
        let vertices = if m > 0 {
            v
        } else {
            [v[3].conj(), v[2].conj(), v[1].conj(), v[0].conj()]
        };
        Ok(Trapezium { m, c, cot, vertices })
    }

    /// Closed membership (boundary included) with tolerance `tol`.
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        let w = if self.m > 0 { z } else { z.conj() };
        let am = self.m.abs();
        let lo = (2 * am - 1) as f64 * PI;
        let hi = (2 * am + 1) as f64 * PI;
        w.im >= lo - tol && w.im <= hi + tol && w.re <= self.c + tol && w.re >= w.im * self.cot - tol
    }

    pub fn side(&self, s: TrapeziumSide) -> (Complex64, Complex64) {
        let v = &self.vertices;
        let pos = self.m > 0;
        match (s, pos) {
            (TrapeziumSide::S1, true) => (v[3], v[0]),
            (TrapeziumSide::S2, true) => (v[0], v[1]),
            (TrapeziumSide::S4, true) => (v[1], v[2]),
            (TrapeziumSide::S3, true) => (v[2], v[3]),
            (TrapeziumSide::S1, false) => (v[3], v[0]),
            (TrapeziumSide::S3, false) => (v[0], v[1]),
            (TrapeziumSide::S4, false) => (v[1], v[2]),
            (TrapeziumSide::S2, false) => (v[2], v[3]),
        }
    }

    /// Signed area; positive for counterclockwise order.
    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.vertices)
    }
}

pub fn polygon_signed_area(v: &[Complex64]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            a.re * b.im - b.re * a.im
        })
        .sum::<f64>()
        / 2.0
}

/// The half-strip of R(m) to the right of x = c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfStrip {
    pub m: i64,
    pub c: f64,
}

impl HalfStrip {
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        z.re >= self.c - tol && in_closed_strip(z, self.m, tol)
    }
}
