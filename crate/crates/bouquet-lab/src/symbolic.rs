//! Itineraries, the inverse branches L_j and periodic points of the shift.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmath::{cabs, carg, cexp, cln, wrap_angle, ComplexSum, PI, TAU};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::geometry::{strip_index, RegionScheme, Trapezium};
use crate::hp::{Hp, DEFAULT_PREC};

/// A finite description of an eventually periodic symbol sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ItinerarySpec {
    pub preperiod: Vec<i64>,
    pub period: Vec<i64>,
    pub bound: u32,
}

impl ItinerarySpec {
    pub fn periodic(period: Vec<i64>, bound: u32) -> Result<Self> {
        Self::new(Vec::new(), period, bound)
    }

    pub fn new(preperiod: Vec<i64>, period: Vec<i64>, bound: u32) -> Result<Self> {
        let s = ItinerarySpec {
            preperiod,
            period,
            bound,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.period.is_empty() {
            return Err(Error::InvalidParams("itinerary period must be nonempty".into()));
        }
        if self.bound == 0 {
            return Err(Error::InvalidParams("symbol bound K must be positive".into()));
        }
        let k = self.bound as i64;
        if let Some(&s) = self.symbols().find(|&&s| s == 0 || s.abs() > k) {
            return Err(Error::InvalidParams(format!("symbol {s} outside ±{{1..{k}}}")));
        }
        Ok(())
    }

    fn symbols(&self) -> impl Iterator<Item = &i64> {
        self.preperiod.iter().chain(self.period.iter())
    }

    pub fn is_periodic(&self) -> bool {
        self.preperiod.is_empty()
    }

    /// The n-th symbol.
    pub fn digit(&self, n: usize) -> i64 {
        if n < self.preperiod.len() {
            self.preperiod[n]
        } else {
            self.period[(n - self.preperiod.len()) % self.period.len()]
        }
    }

    /// The first n symbols.
    pub fn prefix(&self, n: usize) -> Vec<i64> {
        (0..n).map(|i| self.digit(i)).collect()
    }

    /// The left shift σ.
    pub fn shift(&self) -> Self {
        let mut s = self.clone();
        if s.preperiod.is_empty() {
            s.period.rotate_left(1);
        } else {
            s.preperiod.remove(0);
        }
        s
    }

    pub fn negated(&self) -> Self {
        ItinerarySpec {
            preperiod: self.preperiod.iter().map(|s| -s).collect(),
            period: self.period.iter().map(|s| -s).collect(),
            bound: self.bound,
        }
    }

    /// Parse "a,b|c,d" (preperiod | period) or "c,d" (pure period).
    pub fn parse(text: &str, bound: u32) -> Result<Self> {
        let list = |t: &str| -> Result<Vec<i64>> {
            let t = t.trim();
            if t.is_empty() {
                return Ok(Vec::new());
            }
            t.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::InvalidParams(format!("bad symbol {x:?} in itinerary {text:?}")))
                })
                .collect()
        };
        match text.split_once('|') {
            Some((pre, per)) => Self::new(list(pre)?, list(per)?, bound),
            None => Self::new(Vec::new(), list(text)?, bound),
        }
    }
}

impl fmt::Display for ItinerarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        if self.preperiod.is_empty() {
            write!(f, "{}", join(&self.period))
        } else {
            write!(f, "{}|{}", join(&self.preperiod), join(&self.period))
        }
    }
}

impl FromStr for ItinerarySpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bound = s
            .split([',', '|'])
            .filter_map(|x| x.trim().parse::<i64>().ok())
            .map(|x| x.unsigned_abs() as u32)
            .max()
            .unwrap_or(1)
            .max(1);
        Self::parse(s, bound)
    }
}

fn epsilon_unchecked(family: &Family, z: Complex64) -> Complex64 {
    let mut acc = ComplexSum::default();
    for k in 1..family.p() as i64 {
        acc.add(cexp((family.root(k) - 1.0) * z));
    }
    acc.value()
}

/// ln|w| − ln λ + i(Arg w + 2πj): the branch of log(w/λ) in R(j).
fn log_point(family: &Family, w: Complex64, j: i64) -> Complex64 {
    Complex64::new(libm::log(cabs(w)) - family.ln_lambda(), carg(w) + TAU * j as f64)
}

/// Fixed-point iteration z ← log(w/λ) + 2πij − log(1 + ε(z)), seeded at ε = 0.
fn log_iteration(family: &Family, w: Complex64, j: i64, max_iter: usize) -> Option<Complex64> {
    let base = log_point(family, w, j);
    let mut z = base;
    for _ in 0..max_iter {
        let e = epsilon_unchecked(family, z);
        if !(e.re.is_finite() && e.im.is_finite()) || cabs(e) >= 1.0 {
            return None;
        }
        let next = base - cln(1.0 + e);
        let step = cabs(next - z);
        z = next;
        if step <= 4.0 * f64::EPSILON * cabs(z).max(1.0) {
            return Some(z);
        }
    }
    None
}

/// log(f(z)/w) on the principal branch of the argument difference, and f'/f.
fn log_ratio(family: &Family, z: Complex64, w: Complex64) -> (Complex64, Complex64) {
    let (shift, fs, fps) = family.scaled_with_prime(z);
    let h = Complex64::new(
        shift + libm::log(cabs(fs)) - libm::log(cabs(w)),
        wrap_angle(carg(fs) - carg(w)),
    );
    (h, fps / fs)
}

/// Relative residual |f(z)/w − 1|, overflow free.
pub fn relative_residual(family: &Family, z: Complex64, w: Complex64) -> f64 {
    let (h, _) = log_ratio(family, z, w);
    cabs(cexp(h) - 1.0)
}

/// Solves f(z) = w by inverse branch L_j in the pure log form.
///
/// Succeeds only where ε is a contraction, i.e. for w far out in the
/// right half-plane relative to the strip R(j).
pub fn inverse_branch(family: &Family, w: Complex64, j: i64, tol: f64) -> Result<Complex64> {
    if w == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParams("inverse branch undefined at 0".into()));
    }
    let z = log_iteration(family, w, j, 64).ok_or(Error::NonConvergence { iterations: 64 })?;
    let lo = (2 * j - 1) as f64 * PI;
    let hi = (2 * j + 1) as f64 * PI;
    if !(z.im > lo && z.im < hi) {
        return Err(Error::BranchViolation(format!(
            "limit {z} left the strip R({j})"
        )));
    }
    let res = relative_residual(family, z, w);
    if !(res < tol) {
        return Err(Error::NonConvergence { iterations: 64 });
    }
    Ok(z)
}

/// Winding number of g along a closed polygon; None when g nearly vanishes on it.
fn winding(g: &impl Fn(Complex64) -> Complex64, poly: &[Complex64]) -> Option<i64> {
    fn seg(g: &impl Fn(Complex64) -> Complex64, a: Complex64, b: Complex64, ga: Complex64, gb: Complex64, depth: u32) -> Option<f64> {
        let d = wrap_angle(carg(gb) - carg(ga));
        if d.abs() < PI / 4.0 {
            return Some(d);
        }
        if depth > 30 {
            return None;
        }
        let m = (a + b) * 0.5;
        let gm = g(m);
        if !(cabs(gm) > 0.0) {
            return None;
        }
        Some(seg(g, a, m, ga, gm, depth + 1)? + seg(g, m, b, gm, gb, depth + 1)?)
    }
    let mut total = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let steps = 8;
        let mut za = a;
        let mut ga = g(a);
        for k in 1..=steps {
            let zb = a + (b - a) * (k as f64 / steps as f64);
            let gb = g(zb);
            if !(cabs(gb) > 0.0) || !(cabs(ga) > 0.0) {
                return None;
            }
            total += seg(g, za, zb, ga, gb, 0)?;
            za = zb;
            ga = gb;
        }
    }
    let n = total / TAU;
    ((n - n.round()).abs() < 0.1).then(|| n.round() as i64)
}

/// The branches L_j of f^{-1} onto S_j = closure R(j) ∩ {right of V_0 or its mirror}.
///
/// Far out the log iteration is used; closer in, where several terms of f
/// compete, a damped Newton solve with a list of seeds picks the root in S_j.
#[derive(Debug, Clone)]
pub struct Branches {
    family: Family,
    cot: f64,
}

pub const DOMAIN_TOL: f64 = 1e-9;

impl Branches {
    pub fn new(family: &Family) -> Self {
        Branches {
            family: family.clone(),
            cot: family.cot_half(),
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Closed membership in S_j.
    pub fn in_domain(&self, z: Complex64, j: i64, tol: f64) -> bool {
        let lo = (2 * j - 1) as f64 * PI;
        let hi = (2 * j + 1) as f64 * PI;
        if z.im < lo - tol || z.im > hi + tol {
            return false;
        }
        let edge = match j.signum() {
            1 => z.im * self.cot,
            -1 => -z.im * self.cot,
            _ => z.im.abs() * self.cot,
        };
        z.re >= edge - tol
    }

    pub fn apply(&self, w: Complex64, j: i64, hint: Option<Complex64>) -> Result<Complex64> {
        if j < 0 {
            return self
                .apply(w.conj(), -j, hint.map(|h| h.conj()))
                .map(|z| z.conj());
        }
        if !(w.re.is_finite() && w.im.is_finite()) || w == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidParams(format!("cannot invert at w = {w}")));
        }
        let fam = &self.family;
        let lw = libm::log(cabs(w)) - fam.ln_lambda();
        if lw > (2 * j + 1) as f64 * PI * self.cot + 1.0 {
            if let Some(z) = log_iteration(fam, w, j, 64) {
                if self.in_domain(z, j, DOMAIN_TOL) {
                    return Ok(z);
                }
            }
        }
        if let Some(z) = hint.and_then(|h| self.newton(w, h)) {
            if self.in_domain(z, j, DOMAIN_TOL) {
                return Ok(z);
            }
        }
        // near the zeros of f on V_0 in R(j), f(z) ≈ f'(z*)(z − z*) takes small values
        for y in [(2 * j) as f64 - 0.5, (2 * j) as f64 + 0.5] {
            let y = y * PI;
            if let Some(z) = self.newton(w, Complex64::new(y * self.cot, y)) {
                if self.in_domain(z, j, DOMAIN_TOL) {
                    return Ok(z);
                }
            }
        }
        if let Some(z) = self.continuation(w, j) {
            if self.in_domain(z, j, DOMAIN_TOL) {
                return Ok(z);
            }
        }
        if let Some(z) = self.subdivide(w, j) {
            if self.in_domain(z, j, DOMAIN_TOL) {
                return Ok(z);
            }
        }
        Err(Error::BranchViolation(format!("no preimage of {w} found in S_{j}")))
    }

    /// Argument-principle bisection over the bounded part of S_j that can
    /// hold a preimage, then Newton from the final cell.
    fn subdivide(&self, w: Complex64, j: i64) -> Option<Complex64> {
        let fam = &self.family;
        let lo = (2 * j - 1) as f64 * PI;
        let hi = (2 * j + 1) as f64 * PI;
        let right = (libm::log(cabs(w)) - fam.ln_lambda() + 3.0).max(hi * self.cot + 1.0);
        let g = |z: Complex64| {
            let sc = fam.scaled(z);
            sc.value - w * libm::exp(-sc.shift)
        };
        let mut quad = [
            Complex64::new(lo * self.cot, lo),
            Complex64::new(right, lo),
            Complex64::new(right, hi),
            Complex64::new(hi * self.cot, hi),
        ];
        if winding(&g, &quad)? != 1 {
            return None;
        }
        for _ in 0..40 {
            let d1 = cabs(quad[1] - quad[0]).max(cabs(quad[2] - quad[3]));
            let d2 = cabs(quad[3] - quad[0]).max(cabs(quad[2] - quad[1]));
            if d1.max(d2) < 0.05 {
                break;
            }
            let halves = if d1 >= d2 {
                let (m0, m1) = ((quad[0] + quad[1]) * 0.5, (quad[3] + quad[2]) * 0.5);
                [[quad[0], m0, m1, quad[3]], [m0, quad[1], quad[2], m1]]
            } else {
                let (m0, m1) = ((quad[0] + quad[3]) * 0.5, (quad[1] + quad[2]) * 0.5);
                [[quad[0], quad[1], m1, m0], [m0, m1, quad[2], quad[3]]]
            };
            match winding(&g, &halves[0]) {
                Some(1) => quad = halves[0],
                _ => match winding(&g, &halves[1]) {
                    Some(1) => quad = halves[1],
                    _ => break,
                },
            }
        }
        let center = (quad[0] + quad[1] + quad[2] + quad[3]) * 0.25;
        self.newton(w, center)
    }

    /// Follows the root along w·e^{u − ln|w|} as u decreases from the far
    /// region, where the log iteration is valid, down to ln|w|.
    fn continuation(&self, w: Complex64, j: i64) -> Option<Complex64> {
        let fam = &self.family;
        let lw = libm::log(cabs(w));
        let far = (2 * j + 1) as f64 * PI * self.cot + 2.0 + fam.ln_lambda();
        let scaled = |u: f64| w * libm::exp(u - lw);
        let mut u = far.max(lw);
        let mut z = log_iteration(fam, scaled(u), j, 64)?;
        let mut du = 0.25;
        while u > lw {
            let next = (u - du).max(lw);
            match self.newton(scaled(next), z) {
                Some(zn) if cabs(zn - z) < 1.0 => {
                    z = zn;
                    u = next;
                    du = (du * 1.5).min(0.5);
                }
                _ => {
                    du *= 0.5;
                    if du < 1e-4 {
                        return None;
                    }
                }
            }
        }
        Some(z)
    }

    fn newton(&self, w: Complex64, seed: Complex64) -> Option<Complex64> {
        let mut z = seed;
        for _ in 0..80 {
            let (h, dlog) = log_ratio(&self.family, z, w);
            if !(h.re.is_finite() && h.im.is_finite()) {
                return None;
            }
            // Newton on log(f/w) converges badly near zeros of f; use f/w − 1 there
            let mut step = if h.re > 8.0 {
                -h / dlog
            } else {
                let q = cexp(h);
                -(q - 1.0) / (q * dlog)
            };
            if !(step.re.is_finite() && step.im.is_finite()) {
                return None;
            }
            let n = cabs(step);
            if n > 1.0 {
                step /= n;
            }
            z += step;
            if n <= 1e-14 * cabs(z).max(1.0) {
                break;
            }
        }
        self.accept(z, w).then_some(z)
    }

    /// Residual test relative to the size of the cancelling terms.
    fn accept(&self, z: Complex64, w: Complex64) -> bool {
        let shift = self.family.dominant_exponent(z) + self.family.ln_lambda();
        let cancel = (libm::exp(shift) / cabs(w)).max(1.0);
        relative_residual(&self.family, z, w) <= 1e-12 * cancel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n")]
pub enum ItineraryStatus {
    Completed,
    Escaped(usize),
    BoundaryHit(usize),
    Overflow(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItineraryResult {
    pub digits: Vec<i64>,
    pub status: ItineraryStatus,
}

/// Strip digits of the forward f64 orbit of z.
pub fn itinerary_of(family: &Family, z: Complex64, n_max: usize, escape_radius: f64) -> ItineraryResult {
    let mut digits = Vec::with_capacity(n_max);
    let mut w = z;
    for n in 0..n_max {
        match strip_index(w) {
            Ok(k) => digits.push(k),
            Err(_) => {
                return ItineraryResult {
                    digits,
                    status: ItineraryStatus::BoundaryHit(n),
                }
            }
        }
        if cabs(w) > escape_radius {
            return ItineraryResult {
                digits,
                status: ItineraryStatus::Escaped(n),
            };
        }
        match family.f(w) {
            Ok(next) => w = next,
            Err(_) => {
                return ItineraryResult {
                    digits,
                    status: ItineraryStatus::Overflow(n + 1),
                }
            }
        }
    }
    ItineraryResult {
        digits,
        status: ItineraryStatus::Completed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPointRecord {
    pub itinerary: ItinerarySpec,
    pub period: usize,
    /// Leading part of z(s).
    pub z: Complex64,
    /// Remainder so that z + z_lo carries the refined point beyond f64.
    pub z_lo: Complex64,
    /// z(s), f(z(s)), ..., f^{n-1}(z(s)), leading parts.
    pub orbit: Vec<Complex64>,
    /// (f^n)'(z(s)).
    pub multiplier: Complex64,
    /// |f^n(z) − z| evaluated in extended precision at z + z_lo.
    pub closure_residual: f64,
    /// Successive step sizes of the contraction.
    pub steps: Vec<f64>,
}

/// Applies L_{s_0} ∘ ... ∘ L_{s_{n-1}} to z, refreshing the chain hints.
fn apply_chain(br: &Branches, digits: &[i64], z: Complex64, chain: &mut Vec<Complex64>) -> Result<Complex64> {
    let n = digits.len();
    let mut w = z;
    let have_hints = chain.len() == n;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let hint = have_hints.then(|| chain[i]);
        w = br.apply(w, digits[i], hint)?;
        out[i] = w;
    }
    *chain = out;
    Ok(w)
}

/// The periodic point z(s) of the pure period `digits`.
pub fn periodic_point(scheme: &RegionScheme, digits: &[i64], tol: f64) -> Result<PeriodicPointRecord> {
    let family = scheme.family()?;
    periodic_point_with(&Branches::new(&family), scheme, digits, tol)
}

pub fn periodic_point_with(
    br: &Branches,
    scheme: &RegionScheme,
    digits: &[i64],
    tol: f64,
) -> Result<PeriodicPointRecord> {
    let bound = digits.iter().map(|s| s.unsigned_abs()).max().unwrap_or(1) as u32;
    let itinerary = ItinerarySpec::periodic(digits.to_vec(), bound)?;
    let n = digits.len();
    let family = br.family();
    let mut z = Complex64::new(scheme.c, TAU * digits[0] as f64);
    let mut chain = Vec::new();
    let mut steps = Vec::new();
    const MAX_ITER: usize = 200;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let next = apply_chain(br, digits, z, &mut chain)?;
        let step = cabs(next - z);
        steps.push(step);
        z = next;
        if step <= tol * cabs(z).max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations: MAX_ITER });
    }
    // orbit: chain[i] lies in S_{s_i} and f(chain[i]) = chain[i+1]
    apply_chain(br, digits, z, &mut chain)?;
    for (i, &w) in chain.iter().enumerate() {
        if !br.in_domain(w, digits[i], DOMAIN_TOL) {
            return Err(Error::CoverageViolation(format!(
                "orbit point {i} = {w} is outside the domain of L_{}",
                digits[i]
            )));
        }
    }
    let mut hp = Hp::new(family.params(), DEFAULT_PREC);
    let (cycle, _) = hp.refine_cycle(&chain, 40);
    let mut orbit = Vec::with_capacity(n);
    for c in &cycle {
        orbit.push(hp.to_c64(c));
    }
    let (z_hi, z_lo) = hp.split(&cycle[0]);
    let back = hp.iterate(&cycle[0], n);
    let closure_residual = hp.abs_f64(&hp.sub(&back, &cycle[0]));
    let mut multiplier = Complex64::new(1.0, 0.0);
    for &w in &orbit {
        multiplier *= family.f_prime(w)?;
    }
    Ok(PeriodicPointRecord {
        itinerary,
        period: n,
        z: z_hi,
        z_lo,
        orbit,
        multiplier,
        closure_residual,
        steps,
    })
}

/// All words of length 1..=max_len over ±{1..k}.
pub fn all_words(k: i64, max_len: usize) -> Vec<Vec<i64>> {
    let symbols: Vec<i64> = (1..=k).flat_map(|s| [s, -s]).collect();
    let mut out = Vec::new();
    let mut layer: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                symbols.iter().map(move |&s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub c: f64,
    pub k_bound: u32,
    /// min over Y±_m samples of −Re f / (λ e^{A}).
    pub min_neg_re: f64,
    pub left_half_plane_pass: bool,
    /// max over S⁴ samples of |f − λ e^z| / (λ e^c).
    pub annulus_ratio: f64,
    /// (λ e^c − halfwidth) − max |z| over T^K_c.
    pub annulus_margin: f64,
    pub annulus_pass: bool,
    /// Fewest sign changes of Re f seen along one S⁴ side.
    pub min_sign_changes: usize,
    pub sign_change_pass: bool,
}

impl CoveringReport {
    pub fn pass(&self) -> bool {
        self.left_half_plane_pass && self.annulus_pass && self.sign_change_pass
    }
}

/// Farthest point of T^K_c from the origin.
pub fn trapezium_union_radius(c: f64, k: u32) -> f64 {
    cabs(Complex64::new(c, (2 * k + 1) as f64 * PI))
}

/// Direct bound on the annulus halfwidth relative to e^c on S⁴ of T_{m,c}:
/// (p−1) e^{(2m+1)π sin(2π/p)} e^{c cos(2π/p)} / e^c.
pub fn annulus_ratio_bound(p: usize, m: u32, c: f64) -> f64 {
    let (s, co) = libm::sincos(TAU / p as f64);
    (p - 1) as f64 * libm::exp((2 * m + 1) as f64 * PI * s.abs() + c * co - c)
}

fn s4_stats(family: &Family, c: f64, m: i64, n: usize) -> (f64, usize) {
    let lo = (2 * m - 1) as f64 * PI;
    let mut worst: f64 = 0.0;
    let mut changes = 0;
    let mut prev = 0.0;
    for i in 0..=n {
        let y = lo + TAU * i as f64 / n as f64;
        let z = Complex64::new(c, y);
        let mut rest = ComplexSum::default();
        for k in 1..family.p() as i64 {
            let x = family.root(k) * z;
            rest.add(cexp(Complex64::new(x.re - c, x.im)));
        }
        worst = worst.max(cabs(rest.value()));
        let re = family.scaled(z).value.re;
        if i > 0 && re.signum() != prev && re != 0.0 {
            changes += 1;
        }
        if re != 0.0 {
            prev = re.signum();
        }
    }
    (worst, changes)
}

/// Sampled checks that f maps each trapezium over all of them.
pub fn verify_covering(
    family: &Family,
    c: f64,
    k_bound: u32,
    m_range: (i64, i64),
    n_samples: usize,
) -> CoveringReport {
    let cot = family.cot_half();
    let mut min_neg_re = f64::INFINITY;
    for m in m_range.0..=m_range.1 {
        for y in [(2 * m - 1) as f64 * PI, (2 * m + 1) as f64 * PI] {
            for sign in [1.0, -1.0] {
                let y = sign * y;
                let x0 = y.abs() * cot;
                for i in 0..n_samples {
                    let x = x0 + 1e-9 + 40.0 * i as f64 / n_samples as f64;
                    let v = family.scaled(Complex64::new(x, y)).value;
                    min_neg_re = min_neg_re.min(-v.re);
                }
            }
        }
    }
    let mut annulus_ratio: f64 = 0.0;
    let mut min_sign_changes = usize::MAX;
    for m in 1..=k_bound as i64 {
        for mm in [m, -m] {
            let (r, ch) = s4_stats(family, c, mm, n_samples.max(16));
            annulus_ratio = annulus_ratio.max(r);
            min_sign_changes = min_sign_changes.min(ch);
        }
    }
    let ec = libm::exp(c + family.ln_lambda());
    let annulus_margin = ec * (1.0 - annulus_ratio) - trapezium_union_radius(c, k_bound);
    CoveringReport {
        c,
        k_bound,
        min_neg_re,
        left_half_plane_pass: min_neg_re > 0.0,
        annulus_ratio,
        annulus_margin,
        annulus_pass: annulus_margin > 0.0,
        min_sign_changes,
        sign_change_pass: min_sign_changes >= 2,
    }
}

/// The c used for the symbolic dynamics on K symbols: every requirement on
/// c (strip geometry, nondegenerate trapeziums, annulus covering) met, times
/// the safety factor.
pub fn calibrate_c(scheme: &RegionScheme, k_bound: u32) -> Result<f64> {
    let family = scheme.family()?;
    let cot = family.cot_half();
    let mut c = (scheme.safety * scheme.tau / family.sin_half()).max((2 * k_bound + 1) as f64 * PI * cot);
    for _ in 0..4000 {
        let rep = verify_covering(&family, c, k_bound, (1, 1), 64);
        if rep.annulus_pass && rep.sign_change_pass && Trapezium::new(family.p(), k_bound as i64, c).is_ok() {
            return Ok(c * scheme.safety);
        }
        c += 0.05;
    }
    Err(Error::NonConvergence { iterations: 4000 })
}

/// The scheme with c replaced by its calibrated value for K symbols.
pub fn dynamics_scheme(scheme: &RegionScheme, k_bound: u32) -> Result<RegionScheme> {
    Ok(scheme.with_c(calibrate_c(scheme, k_bound)?.max(scheme.c)))
}
