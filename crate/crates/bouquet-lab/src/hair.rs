//! Hairs h_s(t) = lim G^n_s(t), G^n_s = L_{s_0} ∘ ... ∘ L_{s_{n-1}} ∘ E^n.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmath::{cabs, LN_MAX, PI, TAU};
use crate::error::{Error, Result};
use crate::geometry::{in_closed_strip, strip_index};
use crate::hp::Hp;
use crate::symbolic::{periodic_point_with, Branches, ItinerarySpec, PeriodicPointRecord};
use crate::geometry::RegionScheme;

pub const DEFAULT_N_MAX: usize = 24;

/// E(t) = e^{t−1}.
pub fn e_map(t: f64) -> f64 {
    libm::exp(t - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TowerValue {
    Finite(f64),
    /// E^n(t) is not representable; carries E^{n−1}(t), with log E^n(t) = E^{n−1}(t) − 1.
    LogDomain { prev: f64 },
}

/// E^n(t), or the log-domain marker at the first level that overflows.
pub fn e_iter(t: f64, n: usize) -> TowerValue {
    let mut x = t;
    for _ in 0..n {
        if x - 1.0 > LN_MAX {
            return TowerValue::LogDomain { prev: x };
        }
        x = e_map(x);
    }
    TowerValue::Finite(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HairPoint {
    pub z: Complex64,
    pub n_used: usize,
    pub cauchy_gap: f64,
    /// |G^n − G^{n−1}| for n = 2..=n_used.
    pub gaps: Vec<f64>,
    /// True when the innermost step was taken in the log domain (ε dropped).
    pub log_domain: bool,
    /// c_i = L_{s_i} ∘ ... (E^n t): approximations of f^i(h_s(t)).
    pub chain: Vec<Complex64>,
}

/// G^n_s(t) for increasing n until successive values agree to `tol` (relative).
pub fn hair_point(br: &Branches, s: &ItinerarySpec, t: f64, tol: f64, n_max: usize) -> Result<HairPoint> {
    if !(t >= 1.0) {
        return Err(Error::InvalidParams(format!("hair parameter t must be >= 1, got {t}")));
    }
    let ln_lambda = br.family().ln_lambda();
    let mut prev: Option<Complex64> = None;
    let mut chain: Vec<Complex64> = Vec::new();
    let mut gaps = Vec::new();
    for n in 1..=n_max {
        let (mut w, start, log_domain) = match e_iter(t, n) {
            TowerValue::Finite(x) => (Complex64::new(x, 0.0), n, false),
            TowerValue::LogDomain { prev } => {
                let c = Complex64::new(prev - 1.0 - ln_lambda, TAU * s.digit(n - 1) as f64);
                (c, n - 1, true)
            }
        };
        let mut next_chain = vec![Complex64::new(0.0, 0.0); n];
        if log_domain {
            next_chain[n - 1] = w;
        }
        for i in (0..start).rev() {
            w = br.apply(w, s.digit(i), chain.get(i).copied())?;
            next_chain[i] = w;
        }
        chain = next_chain;
        let z = chain[0];
        if let Some(p) = prev {
            let gap = cabs(z - p);
            gaps.push(gap);
            if gap <= tol * cabs(z).max(1.0) || log_domain {
                return Ok(HairPoint {
                    z,
                    n_used: n,
                    cauchy_gap: gap,
                    gaps,
                    log_domain,
                    chain,
                });
            }
        } else if log_domain {
            return Ok(HairPoint {
                z,
                n_used: n,
                cauchy_gap: 0.0,
                gaps,
                log_domain,
                chain,
            });
        }
        prev = Some(z);
    }
    Err(Error::NonConvergence { iterations: n_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HairSample {
    pub t: f64,
    pub z: Complex64,
    pub n_used: usize,
    pub cauchy_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HairCurve {
    pub itinerary: ItinerarySpec,
    pub t_max: f64,
    pub tol: f64,
    pub step_bound: f64,
    pub samples: Vec<HairSample>,
    pub endpoint: Complex64,
}

impl HairCurve {
    /// The curve rotated by e^{iθ}, for hairs in the other sectors.
    pub fn rotated(&self, theta: f64) -> Vec<Complex64> {
        let r = Complex64::from_polar(1.0, theta);
        self.samples.iter().map(|s| s.z * r).collect()
    }
}

/// Samples h_s on a geometric grid in [1, t_max], refined until adjacent
/// points are at most `step_bound` apart.
pub fn trace_hair(
    br: &Branches,
    s: &ItinerarySpec,
    t_max: f64,
    n_samples: usize,
    tol: f64,
    step_bound: f64,
) -> Result<HairCurve> {
    if !(t_max > 1.0) {
        return Err(Error::InvalidParams(format!("t_max must exceed 1, got {t_max}")));
    }
    let n = n_samples.max(2);
    let point = |t: f64| -> Result<HairSample> {
        let h = hair_point(br, s, t, tol, DEFAULT_N_MAX)?;
        Ok(HairSample {
            t,
            z: h.z,
            n_used: h.n_used,
            cauchy_gap: h.cauchy_gap,
        })
    };
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = if i + 1 == n {
            t_max
        } else {
            libm::pow(t_max, i as f64 / (n - 1) as f64)
        };
        samples.push(point(t)?);
    }
    const MAX_SAMPLES: usize = 20_000;
    let mut i = 0;
    while i + 1 < samples.len() {
        let (a, b) = (samples[i], samples[i + 1]);
        let mid = 0.5 * (a.t + b.t);
        if cabs(b.z - a.z) > step_bound && samples.len() < MAX_SAMPLES && mid > a.t && mid < b.t {
            samples.insert(i + 1, point(mid)?);
        } else {
            i += 1;
        }
    }
    Ok(HairCurve {
        itinerary: s.clone(),
        t_max,
        tol,
        step_bound,
        endpoint: samples[0].z,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HairCalibration {
    pub q_hat: f64,
    pub m_hat: f64,
    pub max_deviation: f64,
}

/// Probe words: all periodic words over ±{1..K} of length ≤ 2.
pub fn probe_words(k: u32) -> Vec<ItinerarySpec> {
    crate::symbolic::all_words(k as i64, 2)
        .into_iter()
        .map(|w| ItinerarySpec::periodic(w, k).expect("probe word"))
        .collect()
}

/// Empirical constants of the real-part bounds t − M ≤ Re G ≤ t + M.
pub fn calibrate(br: &Branches, k: u32, tol: f64) -> Result<HairCalibration> {
    let ts: Vec<f64> = (5..=40).map(|t| t as f64).collect();
    let mut dev = vec![0.0f64; ts.len()];
    for s in probe_words(k) {
        for (i, &t) in ts.iter().enumerate() {
            let h = hair_point(br, &s, t, tol, DEFAULT_N_MAX)?;
            dev[i] = dev[i].max((h.z.re - t).abs());
        }
    }
    let max_deviation = dev.iter().copied().fold(0.0, f64::max);
    let m_hat = 1.2 * max_deviation;
    // smallest probe t after which every deviation is within m_hat
    let mut q_hat = *ts.last().unwrap();
    for i in (0..ts.len()).rev() {
        if dev[i] <= m_hat {
            q_hat = ts[i];
        } else {
            break;
        }
    }
    Ok(HairCalibration {
        q_hat,
        m_hat,
        max_deviation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HairReport {
    pub itinerary: String,
    /// |h_s(1) − z(s)|, when s is periodic.
    pub endpoint_error: Option<f64>,
    pub endpoint_pass: bool,
    /// Digits checked on the sample at t = 2 and how many came from the chain.
    pub digits_checked: usize,
    pub digits_from_chain: usize,
    pub itinerary_pass: bool,
    pub escape_growth_pass: bool,
    pub monotone_pass: bool,
    pub containment_pass: bool,
    /// max |f^k(z(s))| over the bounded-orbit horizon, when s is periodic.
    pub endpoint_orbit_max: Option<f64>,
    pub endpoint_orbit_pass: bool,
}

impl HairReport {
    pub fn pass(&self) -> bool {
        self.endpoint_pass
            && self.itinerary_pass
            && self.escape_growth_pass
            && self.monotone_pass
            && self.containment_pass
            && self.endpoint_orbit_pass
    }
}

/// Forward iterates of a periodic point in enough precision to follow the
/// true orbit for `iterations` steps; returns the largest modulus seen.
pub fn endpoint_orbit_max(br: &Branches, rec: &PeriodicPointRecord, iterations: usize) -> Result<f64> {
    let family = br.family();
    let mut growth: f64 = 1.0;
    for &w in &rec.orbit {
        growth = growth.max(cabs(family.f_prime(w)?));
    }
    let prec = 128 + (iterations as f64 * libm::log2(growth)).ceil() as usize;
    let mut hp = Hp::new(family.params(), prec);
    let (cycle, _) = hp.refine_cycle(&rec.orbit, 60);
    let mut z = cycle[0].clone();
    let mut max = hp.abs_f64(&z);
    for _ in 0..iterations {
        z = hp.f(&z);
        max = max.max(hp.abs_f64(&z));
    }
    Ok(max)
}

/// Numerical checks that the sampled curve behaves like the hair attached to z(s).
pub fn verify_hair_properties(
    curve: &HairCurve,
    br: &Branches,
    scheme: &RegionScheme,
    cal: &HairCalibration,
    horizon: usize,
) -> Result<HairReport> {
    let s = &curve.itinerary;
    let mut endpoint_error = None;
    let mut endpoint_orbit = None;
    if s.is_periodic() {
        let rec = periodic_point_with(br, scheme, &s.period, 1e-14)?;
        endpoint_error = Some(cabs(curve.endpoint - rec.z));
        let orbit_r = rec.orbit.iter().map(|z| cabs(*z)).fold(0.0, f64::max);
        endpoint_orbit = Some((endpoint_orbit_max(br, &rec, 50)?, orbit_r));
    }
    let endpoint_pass = endpoint_error.map_or(true, |e| e < 1e-8);

    // itinerary of h_s(2): chain values are f^i(h_s(2)); beyond the chain the
    // iterate is E^i(2) − 1 + 2πi s_i up to terms below f64 resolution
    let h2 = hair_point(br, s, 2.0, curve.tol, DEFAULT_N_MAX)?;
    let mut itinerary_pass = true;
    let mut digits_from_chain = 0;
    for i in 0..horizon {
        let d = if i < h2.chain.len() {
            digits_from_chain += 1;
            strip_index(h2.chain[i]).ok()
        } else {
            match e_iter(2.0, i + 1) {
                TowerValue::Finite(x) => strip_index(Complex64::new(libm::log(x) - br.family().ln_lambda(), TAU * s.digit(i) as f64)).ok(),
                TowerValue::LogDomain { prev } => strip_index(Complex64::new(prev - 1.0, TAU * s.digit(i) as f64)).ok(),
            }
        };
        itinerary_pass &= d == Some(s.digit(i));
    }

    // Re f^{i+1} > Re f^i once the orbit is past the calibrated range
    let threshold = cal.q_hat + cal.m_hat;
    let mut escape_growth_pass = true;
    for sample in curve.samples.iter().filter(|x| x.t > 1.0) {
        let h = hair_point(br, s, sample.t, curve.tol, DEFAULT_N_MAX)?;
        for w in h.chain.windows(2) {
            if w[0].re > threshold {
                escape_growth_pass &= w[1].re > w[0].re;
            }
        }
    }

    let m = cal.m_hat;
    let late: Vec<&HairSample> = curve.samples.iter().filter(|x| x.t >= cal.q_hat + 1.0).collect();
    let mut monotone_pass = late.windows(2).all(|w| w[1].z.re > w[0].z.re - 2.0 * m);
    if let Some(last) = curve.samples.last() {
        if last.t >= cal.q_hat + 1.0 {
            monotone_pass &= last.z.re > last.t - m;
        }
    }

    let s0 = s.digit(0);
    let containment_pass = curve.samples.iter().all(|x| {
        in_closed_strip(x.z, s0, 1e-9) && (x.z.im - TAU * s0 as f64).abs() < PI + 1e-6
    });

    let (endpoint_orbit_max, endpoint_orbit_pass) = match endpoint_orbit {
        Some((mx, r)) => (Some(mx), mx.is_finite() && mx <= 2.0 * r + 1.0),
        None => (None, true),
    };

    Ok(HairReport {
        itinerary: s.to_string(),
        endpoint_error,
        endpoint_pass,
        digits_checked: horizon,
        digits_from_chain,
        itinerary_pass,
        escape_growth_pass,
        monotone_pass,
        containment_pass,
        endpoint_orbit_max,
        endpoint_orbit_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{Family, FamilyParams};
    use crate::symbolic::{dynamics_scheme, periodic_point};

    fn setup(p: usize) -> (Branches, RegionScheme) {
        let params = FamilyParams::new(p, 1.0).unwrap();
        let s = dynamics_scheme(&RegionScheme::defaults(params).unwrap(), 3).unwrap();
        (Branches::new(&Family::new(params).unwrap()), s)
    }

    #[test]
    fn e_map_examples() {
        assert_eq!(e_map(1.0), 1.0);
        assert!((e_map(e_map(2.0)) - libm::exp(std::f64::consts::E - 1.0)).abs() < 1e-12);
        assert!((e_map(e_map(2.0)) - 5.5749).abs() < 1e-3);
        // E^5(1.5) ≈ 31.4 is finite, E^6 ≈ 1.6e13, E^7 is the first log-domain level
        match e_iter(1.5, 5) {
            TowerValue::Finite(x) => assert!(x > 30.0 && x < 33.0),
            v => panic!("{v:?}"),
        }
        assert!(matches!(e_iter(1.5, 6), TowerValue::Finite(_)));
        match e_iter(1.5, 7) {
            TowerValue::LogDomain { prev } => assert_eq!(TowerValue::Finite(prev), e_iter(1.5, 6)),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn endpoint_is_periodic_point() {
        let (br, sc) = setup(3);
        let s = ItinerarySpec::periodic(vec![2], 3).unwrap();
        let h = hair_point(&br, &s, 1.0, 1e-13, DEFAULT_N_MAX).unwrap();
        let z = periodic_point(&sc, &[2], 1e-14).unwrap().z;
        assert!(cabs(h.z - z) < 1e-8);
        for w in h.gaps.windows(2).skip(2) {
            if w[0] > 1e-12 {
                assert!(w[1] <= 0.6 * w[0]);
            }
        }
    }

    #[test]
    fn semiconjugacy() {
        let (br, _) = setup(3);
        let s = ItinerarySpec::periodic(vec![1, -2], 3).unwrap();
        for &t in &[1.0, 1.5, 2.0, 3.0, 4.0] {
            let h = hair_point(&br, &s, t, 1e-13, DEFAULT_N_MAX).unwrap();
            let g = hair_point(&br, &s.shift(), e_map(t), 1e-13, DEFAULT_N_MAX).unwrap();
            let fz = br.family().f(h.z).unwrap();
            assert!(cabs(fz - g.z) < 1e-6 * (1.0 + cabs(g.z)), "t={t}");
        }
    }

    #[test]
    fn conjugate_itinerary_gives_conjugate_hair() {
        let (br, _) = setup(3);
        let s = ItinerarySpec::periodic(vec![1, -1], 3).unwrap();
        let a = trace_hair(&br, &s, 20.0, 16, 1e-12, 1.0).unwrap();
        let b = trace_hair(&br, &s.negated(), 20.0, 16, 1e-12, 1.0).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.z.conj(), y.z);
        }
    }

    #[test]
    fn traced_hair_properties() {
        let (br, sc) = setup(3);
        let cal = calibrate(&br, 2, 1e-12).unwrap();
        let s = ItinerarySpec::periodic(vec![2], 3).unwrap();
        let curve = trace_hair(&br, &s, 30.0, 32, 1e-12, 0.5).unwrap();
        assert_eq!(curve.samples[0].t, 1.0);
        assert!(curve.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert!(curve.samples.windows(2).all(|w| cabs(w[1].z - w[0].z) <= 0.5));
        assert!(curve.samples.last().unwrap().z.re > 30.0 - cal.m_hat);
        let rep = verify_hair_properties(&curve, &br, &sc, &cal, 6).unwrap();
        assert!(rep.pass(), "{rep:?}");
    }
}
