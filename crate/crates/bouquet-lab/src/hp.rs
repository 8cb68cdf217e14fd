//! Multiprecision evaluation of f, used to refine and certify repelling cycles
//! whose multipliers (up to 1e15 and beyond) defeat f64 residual checks.

use astro_float::{BigFloat, Consts, RoundingMode};
use num_complex::Complex64;

use crate::family::FamilyParams;

const RM: RoundingMode = RoundingMode::ToEven;

/// Default working precision in bits.
pub const DEFAULT_PREC: usize = 256;

#[derive(Debug, Clone)]
pub struct HpComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

pub fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    x.to_string().parse().unwrap_or(f64::NAN)
}

pub struct Hp {
    prec: usize,
    consts: Consts,
    roots: Vec<HpComplex>,
    lambda: BigFloat,
}

impl Hp {
    pub fn new(params: FamilyParams, prec: usize) -> Self {
        let mut consts = Consts::new().expect("astro-float constants");
        let p = params.p;
        let pi = consts.pi(prec + 32, RM);
        let mut roots = Vec::with_capacity(p);
        for k in 0..p {
            let a = pi
                .mul(&BigFloat::from_u64(2 * k as u64, prec + 32), prec + 32, RM)
                .div(&BigFloat::from_u64(p as u64, prec + 32), prec + 32, RM);
            roots.push(HpComplex {
                re: a.cos(prec, RM, &mut consts),
                im: a.sin(prec, RM, &mut consts),
            });
        }
        Hp {
            prec,
            consts,
            roots,
            lambda: BigFloat::from_f64(params.lambda, prec),
        }
    }

    pub fn prec(&self) -> usize {
        self.prec
    }

    pub fn from_c64(&self, z: Complex64) -> HpComplex {
        HpComplex {
            re: BigFloat::from_f64(z.re, self.prec),
            im: BigFloat::from_f64(z.im, self.prec),
        }
    }

    /// The exact sum hi + lo.
    pub fn from_parts(&self, hi: Complex64, lo: Complex64) -> HpComplex {
        self.add(&self.from_c64(hi), &self.from_c64(lo))
    }

    pub fn to_c64(&self, z: &HpComplex) -> Complex64 {
        Complex64::new(big_to_f64(&z.re), big_to_f64(&z.im))
    }

    /// Leading f64 part and the f64 rounding of the remainder.
    pub fn split(&self, z: &HpComplex) -> (Complex64, Complex64) {
        let hi = self.to_c64(z);
        let rest = self.sub(z, &self.from_c64(hi));
        (hi, self.to_c64(&rest))
    }

    pub fn add(&self, a: &HpComplex, b: &HpComplex) -> HpComplex {
        HpComplex {
            re: a.re.add(&b.re, self.prec, RM),
            im: a.im.add(&b.im, self.prec, RM),
        }
    }

    pub fn sub(&self, a: &HpComplex, b: &HpComplex) -> HpComplex {
        HpComplex {
            re: a.re.sub(&b.re, self.prec, RM),
            im: a.im.sub(&b.im, self.prec, RM),
        }
    }

    pub fn mul(&self, a: &HpComplex, b: &HpComplex) -> HpComplex {
        let p = self.prec;
        HpComplex {
            re: a.re.mul(&b.re, p, RM).sub(&a.im.mul(&b.im, p, RM), p, RM),
            im: a.re.mul(&b.im, p, RM).add(&a.im.mul(&b.re, p, RM), p, RM),
        }
    }

    pub fn div(&self, a: &HpComplex, b: &HpComplex) -> HpComplex {
        let p = self.prec;
        let den = b.re.mul(&b.re, p, RM).add(&b.im.mul(&b.im, p, RM), p, RM);
        let num = self.mul(
            a,
            &HpComplex {
                re: b.re.clone(),
                im: b.im.neg(),
            },
        );
        HpComplex {
            re: num.re.div(&den, p, RM),
            im: num.im.div(&den, p, RM),
        }
    }

    pub fn one(&self) -> HpComplex {
        HpComplex {
            re: BigFloat::from_f64(1.0, self.prec),
            im: BigFloat::from_f64(0.0, self.prec),
        }
    }

    pub fn abs_f64(&self, z: &HpComplex) -> f64 {
        let p = self.prec;
        let n = z.re.mul(&z.re, p, RM).add(&z.im.mul(&z.im, p, RM), p, RM);
        big_to_f64(&n.sqrt(p, RM))
    }

    pub fn exp(&mut self, z: &HpComplex) -> HpComplex {
        let p = self.prec;
        let m = z.re.exp(p, RM, &mut self.consts);
        let c = z.im.cos(p, RM, &mut self.consts);
        let s = z.im.sin(p, RM, &mut self.consts);
        HpComplex {
            re: m.mul(&c, p, RM),
            im: m.mul(&s, p, RM),
        }
    }

    pub fn f_and_prime(&mut self, z: &HpComplex) -> (HpComplex, HpComplex) {
        let p = self.prec;
        let zero = BigFloat::from_f64(0.0, p);
        let mut f = HpComplex {
            re: zero.clone(),
            im: zero.clone(),
        };
        let mut d = HpComplex {
            re: zero.clone(),
            im: zero,
        };
        for k in 0..self.roots.len() {
            let w = self.roots[k].clone();
            let e = self.exp(&self.mul(&w, z));
            d = self.add(&d, &self.mul(&w, &e));
            f = self.add(&f, &e);
        }
        let lam = HpComplex {
            re: self.lambda.clone(),
            im: BigFloat::from_f64(0.0, p),
        };
        (self.mul(&f, &lam), self.mul(&d, &lam))
    }

    pub fn f(&mut self, z: &HpComplex) -> HpComplex {
        self.f_and_prime(z).0
    }

    /// n-fold forward iterate.
    pub fn iterate(&mut self, z: &HpComplex, n: usize) -> HpComplex {
        let mut w = z.clone();
        for _ in 0..n {
            w = self.f(&w);
        }
        w
    }

    /// Newton's method for the cyclic system f(z_i) = z_{i+1}, i mod n.
    ///
    /// Each linear solve uses the cyclic structure: with d_i = f'(z_i) and
    /// r_i = f(z_i) − z_{i+1}, the corrections satisfy δ_{i+1} = d_i δ_i + r_i
    /// and δ_n = δ_0. Returns the refined cycle and the last correction size.
    pub fn refine_cycle(&mut self, orbit: &[Complex64], max_iter: usize) -> (Vec<HpComplex>, f64) {
        let n = orbit.len();
        let mut z: Vec<HpComplex> = orbit.iter().map(|&w| self.from_c64(w)).collect();
        let scale = orbit.iter().map(|w| w.norm()).fold(1.0, f64::max);
        let target = scale * libm::ldexp(1.0, -(self.prec as i32) + 24);
        let mut last = f64::INFINITY;
        for _ in 0..max_iter {
            let mut d = Vec::with_capacity(n);
            let mut r = Vec::with_capacity(n);
            for i in 0..n {
                let (fi, di) = self.f_and_prime(&z[i]);
                r.push(self.sub(&fi, &z[(i + 1) % n]));
                d.push(di);
            }
            let mut lam = self.one();
            let mut c = self.sub(&self.one(), &self.one());
            for i in 0..n {
                c = self.add(&self.mul(&d[i], &c), &r[i]);
                lam = self.mul(&lam, &d[i]);
            }
            let mut delta = self.div(&c, &self.sub(&self.one(), &lam));
            let mut size: f64 = 0.0;
            for i in 0..n {
                size = size.max(self.abs_f64(&delta));
                z[i] = self.add(&z[i], &delta);
                delta = self.add(&self.mul(&d[i], &delta), &r[i]);
            }
            last = size;
            if size < target {
                break;
            }
        }
        (z, last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Family;

    #[test]
    fn agrees_with_f64_evaluation() {
        let params = FamilyParams::new(3, 1.0).unwrap();
        let fam = Family::new(params).unwrap();
        let mut hp = Hp::new(params, 128);
        for &(x, y) in &[(0.0, 0.0), (2.5, 6.0), (-3.0, 1.0), (10.0, -20.0)] {
            let z = Complex64::new(x, y);
            let w = hp.from_c64(z);
            let fw = hp.f(&w);
            let a = hp.to_c64(&fw);
            let b = fam.f(z).unwrap();
            assert!((a - b).norm() < 1e-13 * (1.0 + b.norm()), "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn split_recovers_value() {
        let params = FamilyParams::new(3, 1.0).unwrap();
        let hp = Hp::new(params, 200);
        let third = BigFloat::from_f64(1.0, 200).div(&BigFloat::from_f64(3.0, 200), 200, RM);
        let z = HpComplex {
            re: third.clone(),
            im: third.neg(),
        };
        let (hi, lo) = hp.split(&z);
        assert_eq!(hi, Complex64::new(1.0 / 3.0, -1.0 / 3.0));
        assert!(lo.norm() > 0.0 && lo.norm() < 1e-16);
        let back = hp.from_parts(hi, lo);
        assert!(hp.abs_f64(&hp.sub(&back, &z)) < 1e-32);
    }
}
