//! Complex helpers on top of `libm`, so results are identical on every platform.

use num_complex::Complex64;

/// ln(f64::MAX); exponents above this overflow.
pub const LN_MAX: f64 = 709.782_712_893_384;

pub const PI: f64 = std::f64::consts::PI;
pub const TAU: f64 = std::f64::consts::TAU;

#[inline]
pub fn cexp(z: Complex64) -> Complex64 {
    let m = libm::exp(z.re);
    let (s, c) = libm::sincos(z.im);
    Complex64::new(m * c, m * s)
}

#[inline]
pub fn cabs(z: Complex64) -> f64 {
    libm::hypot(z.re, z.im)
}

#[inline]
pub fn carg(z: Complex64) -> f64 {
    libm::atan2(z.im, z.re)
}

/// Principal logarithm.
#[inline]
pub fn cln(z: Complex64) -> Complex64 {
    Complex64::new(libm::log(cabs(z)), carg(z))
}

/// Point with modulus `exp(log_mod)` and argument `arg`.
#[inline]
pub fn from_polar_log(log_mod: f64, arg: f64) -> Complex64 {
    let m = libm::exp(log_mod);
    let (s, c) = libm::sincos(arg);
    Complex64::new(m * c, m * s)
}

/// Reduce an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = libm::remainder(a, TAU);
    if r <= -PI {
        r += TAU;
    }
    r
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Sum of two reals that is bitwise symmetric in its arguments.
#[inline]
fn two_sum_sym(a: f64, b: f64) -> (f64, f64) {
    let (big, small) = if a.abs() > b.abs() || (a.abs() == b.abs() && a >= b) {
        (a, b)
    } else {
        (b, a)
    };
    let s = big + small;
    (s, small - (s - big))
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.sum, x);
        self.sum = s;
        self.comp += e;
    }

    #[inline]
    pub fn add_comp(&mut self, e: f64) {
        self.comp += e;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    /// Adds `a + b` so that swapping `a` and `b` gives bitwise the same state.
    #[inline]
    pub fn add_pair(&mut self, a: Complex64, b: Complex64) {
        let (sr, er) = two_sum_sym(a.re, b.re);
        let (si, ei) = two_sum_sym(a.im, b.im);
        self.re.add(sr);
        self.re.add_comp(er);
        self.im.add(si);
        self.im.add_comp(ei);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}
