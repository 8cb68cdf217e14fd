//! Zeros and critical points of f on the rays V_k.
//!
//! Everything is computed on V_0 in the radial coordinate r (z = r e^{iπ/p})
//! and rotated to the other rays. Values are carried as e^{shift}·value with
//! shift = r cos(π/p) + ln λ so that large r never overflows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmath::{cabs, carg, cexp, wrap_angle, ComplexSum, Neumaier, LN_MAX, PI, TAU};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::geometry::RegionScheme;

/// f and d f/dr along V_0 at radius r, as e^{shift}·(value, deriv).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayValue {
    pub shift: f64,
    pub value: f64,
    pub deriv: f64,
}

impl RayValue {
    /// Derivative in r of the scaled value e^{-shift} f.
    fn scaled_slope(&self, cos_a: f64) -> f64 {
        self.deriv - cos_a * self.value
    }
}

/// Pairs the conjugate terms k and p-1-k: 2 e^{u_k} cos v_k, plus e^{-r} for odd p.
pub fn ray_scaled(family: &Family, r: f64) -> RayValue {
    let p = family.p();
    let u0 = r * family.cos_half();
    let mut val = Neumaier::default();
    let mut der = Neumaier::default();
    for k in 0..p / 2 {
        let dir = family.ray_dir(k);
        let (u, v) = (r * dir.re, r * dir.im);
        let e = 2.0 * libm::exp(u - u0);
        let (sv, cv) = libm::sincos(v);
        val.add(e * cv);
        // cos(v + θ) = cos v cos θ − sin v sin θ
        der.add(e * (cv * dir.re - sv * dir.im));
    }
    if p % 2 == 1 {
        let e = libm::exp(-r - u0);
        val.add(e);
        der.add(-e);
    }
    RayValue {
        shift: u0 + family.ln_lambda(),
        value: val.value(),
        deriv: der.value(),
    }
}

/// f(r e^{iπ/p}) via the real pairing formula.
pub fn real_restriction(family: &Family, r: f64) -> Result<f64> {
    let v = ray_scaled(family, r);
    if v.shift > LN_MAX - 1.0 {
        return Err(Error::Overflow { exponent: v.shift });
    }
    Ok(v.value * libm::exp(v.shift))
}

/// Derivative in r of the real restriction, i.e. Re(e^{iπ/p} f'(r e^{iπ/p})).
pub fn real_restriction_prime(family: &Family, r: f64) -> Result<f64> {
    let v = ray_scaled(family, r);
    if v.shift > LN_MAX - 1.0 {
        return Err(Error::Overflow { exponent: v.shift });
    }
    Ok(v.deriv * libm::exp(v.shift))
}

/// Sign and log-modulus of the real restriction; never overflows.
pub fn real_restriction_log(family: &Family, r: f64) -> (f64, f64) {
    let v = ray_scaled(family, r);
    (v.value.signum(), v.shift + libm::log(v.value.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub ray_index: usize,
    pub m: i64,
    pub r: f64,
    pub z: Complex64,
    /// |f(z)| / (λ e^{Re z}) where Re z is taken on V_0.
    pub residual: f64,
    /// Im-range on V_0 over which the sign change was observed.
    pub bracket: (f64, f64),
    /// True when the Newton polish had to be abandoned for bisection.
    pub bisection_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRecord {
    pub ray_index: usize,
    pub m: i64,
    pub r: f64,
    pub z: Complex64,
    /// Real critical value; infinite when it leaves the f64 range.
    pub f_value: f64,
    /// |Im f| / |f| at z.
    pub im_ratio: f64,
    /// |f'| / (|f''| · zero spacing) at z.
    pub slope_ratio: f64,
    /// Indices of the neighbouring zeros in the input list.
    pub neighbors: (usize, usize),
}

/// Relative residual |f(z)| / (λ e^{A}), A the dominant exponent.
pub fn log_relative_residual(family: &Family, z: Complex64) -> f64 {
    cabs(family.scaled(z).value)
}

fn locate_on_v0(family: &Family, m: i64) -> Result<(f64, bool)> {
    let s = family.sin_half();
    let cos_a = family.cos_half();
    let mut lo = m as f64 * PI / s;
    let mut hi = (m + 1) as f64 * PI / s;
    let flo = ray_scaled(family, lo).value;
    let fhi = ray_scaled(family, hi).value;
    if flo == 0.0 {
        return Ok((lo, false));
    }
    if fhi == 0.0 {
        return Ok((hi, false));
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let lo_sign = flo.signum();
    // guess from the zero of the two-term model: y = mπ + π/2
    let mut x = (m as f64 + 0.5) * PI / s;
    let mut bisection_only = false;
    for _ in 0..200 {
        let v = ray_scaled(family, x);
        if v.value == 0.0 {
            return Ok((x, bisection_only));
        }
        if v.value.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let slope = v.scaled_slope(cos_a);
        let newton = x - v.value / slope;
        let next = if slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            bisection_only = true;
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok((next, bisection_only));
        }
        x = next;
    }
    Ok((x, bisection_only))
}

/// One zero per rectangle index m in [m_lo, m_hi] on ray V_{ray_index}.
pub fn find_zeros_on_ray(
    family: &Family,
    _scheme: &RegionScheme,
    ray_index: usize,
    m_lo: i64,
    m_hi: i64,
) -> Result<Vec<ZeroRecord>> {
    if m_lo < 1 || m_hi < m_lo {
        return Err(Error::InvalidParams(format!("bad m range {m_lo}..{m_hi}")));
    }
    let dir = family.ray_dir(ray_index);
    (m_lo..=m_hi)
        .map(|m| {
            let (r, bisection_only) = locate_on_v0(family, m)?;
            let z = dir * r;
            Ok(ZeroRecord {
                ray_index: ray_index % family.p(),
                m,
                r,
                z,
                residual: log_relative_residual(family, z),
                bracket: (m as f64 * PI, (m + 1) as f64 * PI),
                bisection_only,
            })
        })
        .collect()
}

fn seg_arg(family: &Family, z: Complex64) -> Result<f64> {
    let (_, f, fp) = family.scaled_with_prime(z);
    let d = cabs(f) / cabs(fp);
    if d < 1e-6 {
        return Err(Error::ZeroOnContour { distance: d });
    }
    Ok(carg(f))
}

fn arg_change(
    family: &Family,
    a: Complex64,
    b: Complex64,
    arg_a: f64,
    arg_b: f64,
    depth: u32,
) -> Result<f64> {
    let d = wrap_angle(arg_b - arg_a);
    if d.abs() < PI / 2.0 {
        return Ok(d);
    }
    if depth > 48 {
        return Err(Error::NonIntegerWinding { value: f64::NAN });
    }
    let mid = (a + b) * 0.5;
    let am = seg_arg(family, mid)?;
    Ok(arg_change(family, a, mid, arg_a, am, depth + 1)? + arg_change(family, mid, b, am, arg_b, depth + 1)?)
}

/// Winding number of f along a closed polygon (argument principle).
pub fn count_zeros_winding(family: &Family, contour: &[Complex64], n_samples: usize) -> Result<i64> {
    if contour.len() < 3 {
        return Err(Error::Degenerate("contour needs at least 3 vertices".into()));
    }
    let per = (n_samples / contour.len()).max(4);
    let mut total = 0.0;
    for i in 0..contour.len() {
        let a = contour[i];
        let b = contour[(i + 1) % contour.len()];
        let mut prev = a;
        let mut prev_arg = seg_arg(family, a)?;
        for j in 1..=per {
            let t = j as f64 / per as f64;
            let z = a + (b - a) * t;
            let za = seg_arg(family, z)?;
            total += arg_change(family, prev, z, prev_arg, za, 0)?;
            prev = z;
            prev_arg = za;
        }
    }
    let w = total / TAU;
    if (w - w.round()).abs() > 0.1 {
        return Err(Error::NonIntegerWinding { value: w });
    }
    Ok(w.round() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoucheReport {
    pub m: i64,
    /// min over samples of (|φ| − |f − φ|) / e^{A}, A the dominant exponent.
    pub min_margin: f64,
    pub pass: bool,
    /// min over ∂T_0(ν) samples of 1 − Σ_{k≥1} |e^{ω^k z}| / |e^z|.
    pub boundary_margin: f64,
    pub boundary_pass: bool,
}

/// Points spread along the perimeter of a polygon.
pub fn perimeter_samples(v: &[Complex64], n: usize) -> Vec<Complex64> {
    let per = (n / v.len()).max(1);
    let mut out = Vec::with_capacity(per * v.len());
    for i in 0..v.len() {
        let a = v[i];
        let b = v[(i + 1) % v.len()];
        for j in 0..per {
            out.push(a + (b - a) * (j as f64 / per as f64));
        }
    }
    out
}

/// Sampled Rouché comparison of f with φ(z) = e^z + e^{ω^{p-1} z} on ∂D_m.
pub fn verify_rouche(family: &Family, scheme: &RegionScheme, m: i64, n_samples: usize) -> Result<RoucheReport> {
    let p = family.p();
    let rect = scheme.d_rectangle(m)?;
    let mut min_margin = f64::INFINITY;
    for z in perimeter_samples(&rect, n_samples) {
        let a = family.dominant_exponent(z);
        let term = |k: usize| {
            let x = family.root(k as i64) * z;
            cexp(Complex64::new(x.re - a, x.im))
        };
        let phi = term(0) + term(p - 1);
        let mut rest = ComplexSum::default();
        for k in 1..p - 1 {
            rest.add(term(k));
        }
        min_margin = min_margin.min(cabs(phi) - cabs(rest.value()));
    }
    let boundary_margin = boundary_dominance_margin(family, scheme, n_samples);
    Ok(RoucheReport {
        m,
        min_margin,
        pass: min_margin > 0.0,
        boundary_margin,
        boundary_pass: boundary_margin > 0.0,
    })
}

/// min over ∂T_0(ν) of 1 − Σ_{k≥1} |e^{ω^k z}| / |e^z|.
pub fn boundary_dominance_margin(family: &Family, scheme: &RegionScheme, n: usize) -> f64 {
    scheme
        .t0_boundary_samples(n)
        .iter()
        .map(|&z| {
            let s: f64 = (1..family.p())
                .map(|k| libm::exp((family.root(k as i64) * z).re - z.re))
                .sum();
            1.0 - s
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest m ≥ 1 for which the Rouché check passes at m and m + 1.
pub fn calibrate_m_hat(family: &Family, scheme: &RegionScheme, n_samples: usize) -> Result<i64> {
    let mut prev = verify_rouche(family, scheme, 1, n_samples)?.pass;
    for m in 1..500 {
        let next = verify_rouche(family, scheme, m + 1, n_samples)?.pass;
        if prev && next {
            return Ok(m);
        }
        prev = next;
    }
    Err(Error::NonConvergence { iterations: 500 })
}

fn scaled_derivs(family: &Family, z: Complex64) -> (Complex64, Complex64, Complex64) {
    let a = family.dominant_exponent(z);
    let mut f0 = ComplexSum::default();
    let mut f1 = ComplexSum::default();
    let mut f2 = ComplexSum::default();
    for &w in family.roots() {
        let x = w * z;
        let e = cexp(Complex64::new(x.re - a, x.im));
        f0.add(e);
        f1.add(w * e);
        f2.add(w * w * e);
    }
    (f0.value(), f1.value(), f2.value())
}

fn deriv_sign(family: &Family, r: f64) -> f64 {
    ray_scaled(family, r).deriv.signum()
}

/// The critical point between each pair of consecutive zeros.
pub fn find_critical_points_on_ray(family: &Family, zeros: &[ZeroRecord]) -> Result<Vec<CriticalRecord>> {
    let mut out = Vec::new();
    for i in 0..zeros.len().saturating_sub(1) {
        let (za, zb) = (&zeros[i], &zeros[i + 1]);
        if zb.m != za.m + 1 || zb.ray_index != za.ray_index {
            return Err(Error::InvalidParams(format!(
                "zeros {i} and {} are not consecutive on one ray",
                i + 1
            )));
        }
        let (ra, rb) = (za.r, zb.r);
        let mut changes = Vec::new();
        for n in [32usize, 256] {
            changes.clear();
            let mut prev = deriv_sign(family, ra);
            for j in 1..=n {
                let r = ra + (rb - ra) * j as f64 / n as f64;
                let s = deriv_sign(family, r);
                if s != prev && s != 0.0 {
                    changes.push(j);
                }
                prev = s;
            }
            if changes.len() == 1 {
                break;
            }
        }
        if changes.is_empty() {
            return Err(Error::NoneFound { lo: ra, hi: rb });
        }
        if changes.len() > 1 {
            return Err(Error::MultipleSignChanges { lo: ra, hi: rb });
        }
        let n = 256.0_f64.min(if changes[0] > 32 { 256.0 } else { 32.0 });
        let j = changes[0] as f64;
        let mut lo = ra + (rb - ra) * (j - 1.0) / n;
        let mut hi = ra + (rb - ra) * j / n;
        let s_lo = deriv_sign(family, lo);
        while hi - lo > 2.0 * f64::EPSILON * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if deriv_sign(family, mid) == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        let z = family.ray_dir(za.ray_index) * r;
        let rv = ray_scaled(family, r);
        let f_value = if rv.shift > LN_MAX - 1.0 {
            rv.value.signum() * f64::INFINITY
        } else {
            rv.value * libm::exp(rv.shift)
        };
        let (f0, f1, f2) = scaled_derivs(family, z);
        out.push(CriticalRecord {
            ray_index: za.ray_index,
            m: za.m,
            r,
            z,
            f_value,
            im_ratio: f0.im.abs() / cabs(f0),
            slope_ratio: cabs(f1) / (cabs(f2) * (rb - ra)),
            neighbors: (i, i + 1),
        });
    }
    Ok(out)
}

/// E_{d,a}(x) = e^x − d e^{ax}.
pub fn e_da(d: f64, a: f64, x: f64) -> f64 {
    libm::exp(x) - d * libm::exp(a * x)
}

/// Checks that E_{d,a} is increasing and positive-growing on the grid points
/// with x(1 − a) > log⁺(ad).
pub fn e_da_monotone_on(d: f64, a: f64, xs: &[f64]) -> bool {
    let thr = libm::log((a * d).max(1.0));
    let pts: Vec<f64> = xs.iter().copied().filter(|&x| x * (1.0 - a) > thr).collect();
    let deriv_ok = pts
        .iter()
        .all(|&x| libm::exp(x) - a * d * libm::exp(a * x) > 0.0);
    let inc_ok = pts.windows(2).all(|w| e_da(d, a, w[1]) > e_da(d, a, w[0]));
    let grows = pts.last().map_or(true, |&x| e_da(d, a, x) > e_da(d, a, pts[0]));
    deriv_ok && inc_ok && grows
}

/// (d, a) pairs bounding the real restriction: the subdominant terms
/// 2 e^{u_k} (k ≥ 1) and e^{-r} compared against e^{u_0}.
pub fn e_da_pairs(family: &Family) -> Vec<(f64, f64)> {
    let p = family.p();
    let c0 = family.cos_half();
    let mut v: Vec<(f64, f64)> = (1..p / 2).map(|k| (2.0, family.ray_dir(k).re / c0)).collect();
    if p % 2 == 1 {
        v.push((1.0, -1.0 / c0));
    }
    v.push(((p - 2) as f64, family.ray_dir(1).re / c0));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FamilyParams;

    fn setup(p: usize) -> (Family, RegionScheme) {
        let params = FamilyParams::new(p, 1.0).unwrap();
        (Family::new(params).unwrap(), RegionScheme::defaults(params).unwrap())
    }

    #[test]
    fn pairing_formula_matches_direct_evaluation() {
        for p in 3..=7 {
            let (f, _) = setup(p);
            for &r in &[0.0, 0.5, 3.0, 11.0, 37.0] {
                let direct = f.f(f.ray_dir(0) * r).unwrap();
                let rr = real_restriction(&f, r).unwrap();
                assert!((direct.re - rr).abs() <= 1e-10 * (1.0 + direct.norm()), "p={p} r={r}");
                assert!(direct.im.abs() <= 1e-10 * (1.0 + direct.norm()));
                let d = f.f_prime(f.ray_dir(0) * r).unwrap() * f.ray_dir(0);
                let rp = real_restriction_prime(&f, r).unwrap();
                assert!((d.re - rp).abs() <= 1e-10 * (1.0 + d.norm()), "p={p} r={r}");
            }
        }
    }

    #[test]
    fn signs_at_even_and_odd_multiples_of_pi() {
        let (f, _) = setup(3);
        let s = f.sin_half();
        for m in 3..12 {
            assert!(real_restriction(&f, 2.0 * m as f64 * PI / s).unwrap() > 0.0);
            assert!(real_restriction(&f, (2 * m + 1) as f64 * PI / s).unwrap() < 0.0);
        }
    }

    #[test]
    fn zeros_have_small_residual_and_rotate() {
        let (f, s) = setup(3);
        let zs = find_zeros_on_ray(&f, &s, 0, 3, 10).unwrap();
        assert_eq!(zs.len(), 8);
        for z in &zs {
            assert!(z.residual < 1e-9);
            assert!(z.z.im > z.m as f64 * PI && z.z.im < (z.m + 1) as f64 * PI);
            let rot = f.root(1) * z.z;
            assert!(log_relative_residual(&f, rot) < 1e-9);
        }
        let z1 = find_zeros_on_ray(&f, &s, 1, 3, 10).unwrap();
        for (a, b) in zs.iter().zip(&z1) {
            assert!((f.root(1) * a.z - b.z).norm() < 1e-10 * (1.0 + a.z.norm()));
        }
    }

    #[test]
    fn even_p_zeros_symmetric_under_negation() {
        let (f, s) = setup(4);
        let a = find_zeros_on_ray(&f, &s, 0, 3, 8).unwrap();
        let b = find_zeros_on_ray(&f, &s, 2, 3, 8).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.z + y.z).norm() < 1e-10 * x.z.norm());
        }
    }

    #[test]
    fn winding_counts() {
        let (f, s) = setup(3);
        for m in 4..8 {
            let rect = s.d_rectangle(m).unwrap();
            assert_eq!(count_zeros_winding(&f, &rect, 256).unwrap(), 1, "m = {m}");
        }
        let c = Complex64::new(3.0 * s.nu, 0.0);
        let sq: Vec<_> = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
            .iter()
            .map(|&(x, y)| c + Complex64::new(x, y))
            .collect();
        assert_eq!(count_zeros_winding(&f, &sq, 64).unwrap(), 0);
        let z = find_zeros_on_ray(&f, &s, 0, 5, 5).unwrap()[0].z;
        let small: Vec<_> = [(-0.1, -0.1), (0.1, -0.1), (0.1, 0.1), (-0.1, 0.1)]
            .iter()
            .map(|&(x, y)| z + Complex64::new(x, y))
            .collect();
        assert_eq!(count_zeros_winding(&f, &small, 64).unwrap(), 1);
    }

    #[test]
    fn contour_through_zero_is_rejected() {
        let (f, s) = setup(3);
        let z = find_zeros_on_ray(&f, &s, 0, 5, 5).unwrap()[0].z;
        let tri = [z, z + Complex64::new(1.0, 0.0), z + Complex64::new(0.0, 1.0)];
        assert!(matches!(count_zeros_winding(&f, &tri, 30), Err(Error::ZeroOnContour { .. })));
    }

    #[test]
    fn rouche_passes_beyond_threshold() {
        let (f, s) = setup(3);
        let m_hat = calibrate_m_hat(&f, &s, 2048).unwrap();
        assert!(verify_rouche(&f, &s, m_hat + 5, 2048).unwrap().pass);
        assert!(verify_rouche(&f, &s, m_hat + 5, 2048).unwrap().boundary_pass);
    }

    #[test]
    fn critical_points_interlace_and_alternate() {
        let (f, s) = setup(3);
        let zs = find_zeros_on_ray(&f, &s, 0, 3, 12).unwrap();
        let cs = find_critical_points_on_ray(&f, &zs).unwrap();
        assert_eq!(cs.len(), zs.len() - 1);
        for (i, c) in cs.iter().enumerate() {
            assert!(zs[i].r < c.r && c.r < zs[i + 1].r);
            assert!(c.im_ratio < 1e-8);
            assert!(c.slope_ratio < 1e-8);
        }
        for w in cs.windows(2) {
            assert!(w[0].f_value * w[1].f_value < 0.0);
        }
    }

    #[test]
    fn origin_is_critical() {
        let (f, _) = setup(5);
        assert!(f.f_prime(Complex64::new(0.0, 0.0)).unwrap().norm() < 1e-15);
    }

    #[test]
    fn e_da_monotone_for_internal_pairs() {
        let xs: Vec<f64> = (0..400).map(|i| i as f64 * 0.25).collect();
        for p in 3..=8 {
            let (f, _) = setup(p);
            for (d, a) in e_da_pairs(&f) {
                assert!(e_da_monotone_on(d, a, &xs), "p={p} d={d} a={a}");
            }
        }
    }
}
