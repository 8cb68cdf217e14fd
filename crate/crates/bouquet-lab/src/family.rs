//! Evaluation of f(z) = λ Σ_k exp(ω^k z) and its companions.
//!
//! Terms are summed in ascending k with Neumaier compensation. For even p the
//! terms k and k + p/2 are first combined with a symmetric two-sum, which makes
//! f(-z) and f(z) bitwise equal.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmath::{cabs, carg, cexp, ComplexSum, LN_MAX, PI, TAU};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub p: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    1.0
}

impl FamilyParams {
    pub fn new(p: usize, lambda: f64) -> Result<Self> {
        let params = FamilyParams { p, lambda };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 3 {
            return Err(Error::InvalidParams(format!("p must be at least 3, got {}", self.p)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParams(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// `f = exp(shift) * value`; keeps magnitudes far beyond f64 range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub shift: f64,
    pub value: Complex64,
}

impl Scaled {
    pub fn log_mod(&self) -> f64 {
        self.shift + libm::log(cabs(self.value))
    }

    pub fn arg(&self) -> f64 {
        carg(self.value)
    }

    /// The plain value, or `Overflow` if it is not representable.
    pub fn to_complex(&self) -> Result<Complex64> {
        if self.shift <= LN_MAX - 1.0 {
            let z = self.value * libm::exp(self.shift);
            if z.re.is_finite() && z.im.is_finite() {
                return Ok(z);
            }
        }
        let lm = self.log_mod();
        if lm >= LN_MAX {
            return Err(Error::Overflow { exponent: lm });
        }
        Ok(crate::cmath::from_polar_log(lm, self.arg()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub log_mod: f64,
    pub arg: f64,
}

#[derive(Debug, Clone)]
pub struct Family {
    params: FamilyParams,
    roots: Vec<Complex64>,
    rays: Vec<Complex64>,
    ln_lambda: f64,
    sin_a: f64,
    cos_a: f64,
}

/// Table of ω^k with conjugate, negation and reflection symmetries exact.
fn root_table(p: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(0.0, 0.0); p];
    let unit = |k: usize| -> Complex64 {
        if k == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if 4 * k == p {
            return Complex64::new(0.0, 1.0);
        }
        let (s, c) = libm::sincos(TAU * k as f64 / p as f64);
        Complex64::new(c, s)
    };
    if p % 2 == 0 {
        let h = p / 2;
        for (k, slot) in t.iter_mut().enumerate().take(h + 1) {
            *slot = if 4 * k <= p {
                unit(k)
            } else {
                let w = unit(h - k);
                Complex64::new(-w.re, w.im)
            };
        }
        for k in h + 1..p {
            t[k] = -t[k - h];
        }
    } else {
        for k in 0..=p / 2 {
            t[k] = unit(k);
        }
        for k in p / 2 + 1..p {
            t[k] = t[p - k].conj();
        }
    }
    t
}

fn ray_table(p: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(0.0, 0.0); p];
    for k in 0..p {
        let j = p - 1 - k;
        if j < k {
            t[k] = t[j].conj();
        } else if 2 * k + 1 == p {
            t[k] = Complex64::new(-1.0, 0.0);
        } else {
            let (s, c) = libm::sincos((2 * k + 1) as f64 * PI / p as f64);
            t[k] = Complex64::new(c, s);
        }
    }
    t
}

impl Family {
    pub fn new(params: FamilyParams) -> Result<Self> {
        params.validate()?;
        let p = params.p;
        let (sin_a, cos_a) = libm::sincos(PI / p as f64);
        Ok(Family {
            params,
            roots: root_table(p),
            rays: ray_table(p),
            ln_lambda: libm::log(params.lambda),
            sin_a,
            cos_a,
        })
    }

    pub fn with_p(p: usize) -> Result<Self> {
        Family::new(FamilyParams::new(p, 1.0)?)
    }

    pub fn params(&self) -> FamilyParams {
        self.params
    }

    pub fn p(&self) -> usize {
        self.params.p
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    pub fn ln_lambda(&self) -> f64 {
        self.ln_lambda
    }

    /// ω^k, k taken mod p.
    pub fn root(&self, k: i64) -> Complex64 {
        self.roots[k.rem_euclid(self.p() as i64) as usize]
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// Unit vector along V_k, the ray at angle (2k+1)π/p.
    pub fn ray_dir(&self, k: usize) -> Complex64 {
        self.rays[k % self.p()]
    }

    pub fn sin_half(&self) -> f64 {
        self.sin_a
    }

    pub fn cos_half(&self) -> f64 {
        self.cos_a
    }

    pub fn cot_half(&self) -> f64 {
        self.cos_a / self.sin_a
    }

    pub fn tan_half(&self) -> f64 {
        self.sin_a / self.cos_a
    }

    fn sum_terms(&self, term: impl Fn(usize) -> Complex64) -> Complex64 {
        let p = self.p();
        let mut acc = ComplexSum::default();
        if p % 2 == 0 {
            let h = p / 2;
            for k in 0..h {
                acc.add_pair(term(k), term(k + h));
            }
        } else {
            for k in 0..p {
                acc.add(term(k));
            }
        }
        acc.value()
    }

    /// Largest real part among the exponents ω^k z.
    pub fn dominant_exponent(&self, z: Complex64) -> f64 {
        self.roots
            .iter()
            .map(|w| (w * z).re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_range(&self, z: Complex64) -> Result<()> {
        let e = self.dominant_exponent(z) + self.ln_lambda;
        if e > LN_MAX - 1.0 || !e.is_finite() {
            return Err(Error::Overflow { exponent: e });
        }
        Ok(())
    }

    fn finish(&self, s: Complex64, e: f64) -> Result<Complex64> {
        let v = s * self.params.lambda;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow { exponent: e })
        }
    }

    pub fn f(&self, z: Complex64) -> Result<Complex64> {
        self.check_range(z)?;
        let s = self.sum_terms(|k| cexp(self.roots[k] * z));
        self.finish(s, self.dominant_exponent(z))
    }

    pub fn f_prime(&self, z: Complex64) -> Result<Complex64> {
        self.check_range(z)?;
        let s = self.sum_terms(|k| self.roots[k] * cexp(self.roots[k] * z));
        self.finish(s, self.dominant_exponent(z))
    }

    pub fn f_second(&self, z: Complex64) -> Result<Complex64> {
        self.check_range(z)?;
        let s = self.sum_terms(|k| {
            let w = self.roots[k];
            w * w * cexp(w * z)
        });
        self.finish(s, self.dominant_exponent(z))
    }

    /// f and f' together, sharing the exponentials.
    pub fn f_and_prime(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        self.check_range(z)?;
        let mut a = ComplexSum::default();
        let mut b = ComplexSum::default();
        for k in 0..self.p() {
            let e = cexp(self.roots[k] * z);
            a.add(e);
            b.add(self.roots[k] * e);
        }
        let e = self.dominant_exponent(z);
        Ok((self.finish(a.value(), e)?, self.finish(b.value(), e)?))
    }

    /// ε(z) = Σ_{k≥1} exp((ω^k − 1) z), so that f = λ e^z (1 + ε).
    pub fn epsilon(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = ComplexSum::default();
        for k in 1..self.p() {
            let x = self.roots[k] * z - z;
            if x.re > LN_MAX - 1.0 {
                return Err(Error::Overflow { exponent: x.re });
            }
            acc.add(cexp(x));
        }
        Ok(acc.value())
    }

    /// ε and its derivative.
    pub fn epsilon_and_prime(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let mut a = ComplexSum::default();
        let mut b = ComplexSum::default();
        for k in 1..self.p() {
            let w = self.roots[k] - 1.0;
            let x = self.roots[k] * z - z;
            if x.re > LN_MAX - 1.0 {
                return Err(Error::Overflow { exponent: x.re });
            }
            let e = cexp(x);
            a.add(e);
            b.add(w * e);
        }
        Ok((a.value(), b.value()))
    }

    /// f in scaled form; never overflows for finite z.
    pub fn scaled(&self, z: Complex64) -> Scaled {
        let a = self.dominant_exponent(z);
        let s = self.sum_terms(|k| {
            let x = self.roots[k] * z;
            cexp(Complex64::new(x.re - a, x.im))
        });
        Scaled {
            shift: a + self.ln_lambda,
            value: s,
        }
    }

    /// Scaled f and f' with a common shift.
    pub fn scaled_with_prime(&self, z: Complex64) -> (f64, Complex64, Complex64) {
        let a = self.dominant_exponent(z);
        let mut fa = ComplexSum::default();
        let mut fb = ComplexSum::default();
        for k in 0..self.p() {
            let x = self.roots[k] * z;
            let e = cexp(Complex64::new(x.re - a, x.im));
            fa.add(e);
            fb.add(self.roots[k] * e);
        }
        (a + self.ln_lambda, fa.value(), fb.value())
    }

    pub fn log_f(&self, z: Complex64) -> LogValue {
        let s = self.scaled(z);
        LogValue {
            log_mod: s.log_mod(),
            arg: s.arg(),
        }
    }

    /// Reduced function g with f(z) = g(z^p): λ p Σ_j w^j / (jp)!.
    pub fn g(&self, w: Complex64, truncation_tol: f64) -> Complex64 {
        let p = self.p();
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = ComplexSum::default();
        acc.add(term);
        for j in 1..100_000usize {
            let mut denom = 1.0;
            for i in (j - 1) * p + 1..=j * p {
                denom *= i as f64;
            }
            term = term * w / denom;
            acc.add(term);
            let partial = cabs(acc.value());
            if cabs(term) < truncation_tol * partial.max(1.0) {
                break;
            }
        }
        acc.value() * (p as f64 * self.params.lambda)
    }

    fn log_abs_on_circle(&self, r: f64, theta: f64) -> f64 {
        let (s, c) = libm::sincos(theta);
        self.scaled(Complex64::new(r * c, r * s)).log_mod()
    }

    /// log M(r, f), valid for any finite r > 0.
    pub fn log_max_modulus(&self, r: f64, refine_tol: f64) -> f64 {
        const SAMPLES: usize = 4096;
        let arc = TAU / self.p() as f64;
        let h = arc / SAMPLES as f64;
        let vals: Vec<f64> = (0..SAMPLES)
            .map(|i| self.log_abs_on_circle(r, i as f64 * h))
            .collect();
        let mut best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // refine each of the three largest local maxima (cyclically)
        let mut peaks: Vec<usize> = (0..SAMPLES)
            .filter(|&i| {
                let l = vals[(i + SAMPLES - 1) % SAMPLES];
                let n = vals[(i + 1) % SAMPLES];
                vals[i] >= l && vals[i] >= n
            })
            .collect();
        peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let tol = refine_tol.max(1e-15);
        for &i in peaks.iter().take(3) {
            let center = i as f64 * h;
            let v = golden_max(|t| self.log_abs_on_circle(r, t), center - h, center + h, tol);
            best = best.max(v);
        }
        best
    }

    /// M(r, f); `Overflow` when it exceeds the f64 range.
    pub fn max_modulus(&self, r: f64, refine_tol: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::InvalidParams(format!("radius must be positive, got {r}")));
        }
        let l = self.log_max_modulus(r, refine_tol);
        if l >= LN_MAX {
            return Err(Error::Overflow { exponent: l });
        }
        Ok(libm::exp(l))
    }
}

/// Golden-section search for the maximum of a unimodal function on [a, b].
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = fc.max(fd);
    for _ in 0..200 {
        if (b - a).abs() < tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(p: usize) -> Family {
        Family::with_p(p).unwrap()
    }

    #[test]
    fn rejects_small_p_and_bad_lambda() {
        assert!(FamilyParams::new(2, 1.0).is_err());
        assert!(FamilyParams::new(3, 0.0).is_err());
        assert!(FamilyParams::new(3, f64::NAN).is_err());
        assert!(FamilyParams::new(3, 2.0).is_ok());
    }

    #[test]
    fn root_table_symmetries_are_exact() {
        for p in 3..=12 {
            let f = fam(p);
            for k in 0..p {
                assert_eq!(f.root(k as i64).conj(), f.root(p as i64 - k as i64));
                if p % 2 == 0 {
                    assert_eq!(-f.root(k as i64), f.root((k + p / 2) as i64));
                }
                let exact = Complex64::from_polar(1.0, TAU * k as f64 / p as f64);
                assert!((f.root(k as i64) - exact).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn value_at_origin() {
        let f = fam(3);
        assert_eq!(f.f(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(3.0, 0.0));
        assert!(f.f_prime(Complex64::new(0.0, 0.0)).unwrap().norm() < 1e-15);
        let e = f.epsilon(Complex64::new(0.0, 0.0)).unwrap();
        assert!((e - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn real_axis_closed_form_p3() {
        let f = fam(3);
        for &x in &[-4.0, -0.5, 0.7, 3.0, 12.5] {
            let expect = libm::exp(x) + 2.0 * libm::exp(-x / 2.0) * libm::cos(3f64.sqrt() * x / 2.0);
            let got = f.f(Complex64::new(x, 0.0)).unwrap();
            assert!((got.re - expect).abs() < 1e-13 * (1.0 + expect.abs()));
            assert!(got.im.abs() < 1e-13 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let f = fam(4);
        let h = 1e-6;
        for &(x, y) in &[(0.3, 0.4), (2.0, -1.0), (-1.5, 2.5), (5.0, 3.0)] {
            let z = Complex64::new(x, y);
            let d = f.f_prime(z).unwrap();
            let fd = (f.f(z + h).unwrap() - f.f(z - h).unwrap()) / (2.0 * h);
            assert!((d - fd).norm() < 1e-6 * d.norm().max(1.0), "{z}");
        }
    }

    #[test]
    fn derivative_dominated_by_exp_on_real_axis() {
        let f = fam(3);
        let d = f.f_prime(Complex64::new(30.0, 0.0)).unwrap();
        assert!((d.re / libm::exp(30.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn epsilon_decays_and_factorises() {
        let f = fam(3);
        assert!(f.epsilon(Complex64::new(50.0, 0.0)).unwrap().norm() < 1e-10);
        for &(x, y) in &[(1.0, 1.0), (4.0, -2.0), (-2.0, 0.5)] {
            let z = Complex64::new(x, y);
            let lhs = f.f(z).unwrap();
            let rhs = cexp(z) * (1.0 + f.epsilon(z).unwrap());
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
        }
    }

    #[test]
    fn overflow_is_signalled() {
        let f = fam(3);
        assert!(matches!(f.f(Complex64::new(800.0, 0.0)), Err(Error::Overflow { .. })));
        let s = f.scaled(Complex64::new(800.0, 0.0));
        assert!((s.log_mod() - 800.0).abs() < 1e-12);
    }

    #[test]
    fn g_at_zero_and_identity() {
        let f = fam(3);
        assert_eq!(f.g(Complex64::new(0.0, 0.0), 1e-18), Complex64::new(3.0, 0.0));
        let z = Complex64::new(1.2, -0.7);
        let lhs = f.f(z).unwrap();
        let rhs = f.g(z.powu(3), 1e-18);
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn max_modulus_lower_bound() {
        let f = fam(3);
        for &r in &[1.0, 5.0, 20.0] {
            let m = f.max_modulus(r, 1e-12).unwrap();
            let lb = libm::exp(r) - 2.0 * libm::exp(r * libm::cos(TAU / 3.0));
            assert!(m >= lb * (1.0 - 1e-14));
            assert!(m >= f.f(Complex64::new(r, 0.0)).unwrap().norm() * (1.0 - 1e-15));
        }
    }

    #[test]
    fn max_modulus_growth_ratio() {
        let f = fam(3);
        let a = f.max_modulus(20.0, 1e-12).unwrap();
        let b = f.max_modulus(40.0, 1e-12).unwrap();
        assert!(b / a > 1e3);
    }
}
