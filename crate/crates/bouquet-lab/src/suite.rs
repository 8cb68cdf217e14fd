//! Property checks shared by the `verify` command and the acceptance run.

use std::collections::HashMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cmath::{cabs, PI, TAU};
use crate::critical::{
    calibrate_m_hat, count_zeros_winding, e_da_monotone_on, e_da_pairs, find_critical_points_on_ray,
    find_zeros_on_ray, verify_rouche,
};
use crate::error::Result;
use crate::escape::{build_m_table, classify_grid, fast_escape_test, ppm_bytes, sha256_hex, GridSpec, Palette, Window};
use crate::family::Family;
use crate::geometry::{strip_index, RegionScheme};
use crate::hair::{calibrate, e_map, hair_point, trace_hair, verify_hair_properties, HairCalibration, DEFAULT_N_MAX};
use crate::hp::{Hp, DEFAULT_PREC};
use crate::symbolic::{
    all_words, annulus_ratio_bound, dynamics_scheme, periodic_point_with, verify_covering, Branches,
    ItinerarySpec, PeriodicPointRecord, DOMAIN_TOL,
};

/// Rouché and winding checks sample each rectangle perimeter this densely.
pub const CONTOUR_SAMPLES: usize = 2048;
/// Base radius of the iterated maximum modulus table.
pub const FAST_ESCAPE_R: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Wall time; left out of serialized reports so they hash reproducibly.
    #[serde(skip_serializing, default)]
    pub seconds: f64,
    pub detail: Value,
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, Value)>) -> Check {
    let t0 = Instant::now();
    let (pass, detail) = f().unwrap_or_else(|e| (false, json!({ "error": e.to_string() })));
    Check {
        name: name.to_string(),
        pass,
        seconds: t0.elapsed().as_secs_f64(),
        detail,
    }
}

fn disc_point(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.gen::<f64>().sqrt();
    Complex64::from_polar(r, TAU * rng.gen::<f64>())
}

/// |f(ω z) − f(z)| ≤ 1e-12 (1 + |f(z)|) for random |z| ≤ 20.
pub fn check_symmetry(family: &Family, n: usize, seed: u64) -> Check {
    timed("symmetry", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = family.root(1);
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let z = disc_point(&mut rng, 20.0);
            let a = family.f(z)?;
            let b = family.f(w * z)?;
            worst = worst.max(cabs(b - a) / (1.0 + cabs(a)));
        }
        Ok((worst <= 1e-12, json!({ "p": family.p(), "samples": n, "worst": worst })))
    })
}

/// |f(z) − g(z^p)| ≤ 1e-9 (1 + |f(z)|) for random |z| ≤ 3.
pub fn check_g_identity(family: &Family, n: usize, seed: u64) -> Check {
    timed("g_identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let z = disc_point(&mut rng, 3.0);
            let a = family.f(z)?;
            let b = family.g(z.powu(family.p() as u32), 1e-17);
            worst = worst.max(cabs(b - a) / (1.0 + cabs(a)));
        }
        Ok((worst <= 1e-9, json!({ "p": family.p(), "samples": n, "worst": worst })))
    })
}

pub fn check_scheme(scheme: &RegionScheme) -> Check {
    timed("scheme_invariants", || {
        let bad = scheme.invariant_violations();
        Ok((bad.is_empty(), json!({ "scheme": scheme, "violations": bad })))
    })
}

pub fn m_hat(family: &Family, scheme: &RegionScheme) -> Result<i64> {
    calibrate_m_hat(family, scheme, CONTOUR_SAMPLES)
}

/// One zero per D_m on V_0 for m in [M̂+1, M̂+count], confirmed by winding.
pub fn check_zeros(family: &Family, scheme: &RegionScheme, m_hat: i64, count: i64) -> Check {
    timed("zeros", || {
        let zeros = find_zeros_on_ray(family, scheme, 0, m_hat + 1, m_hat + count)?;
        let mut failures = Vec::new();
        let mut max_residual: f64 = 0.0;
        for z in &zeros {
            let winding = count_zeros_winding(family, &scheme.d_rectangle(z.m)?, CONTOUR_SAMPLES)?;
            let (lo, hi) = (z.m as f64 * PI, (z.m + 1) as f64 * PI);
            let inside = z.z.im > lo && z.z.im < hi;
            max_residual = max_residual.max(z.residual);
            if winding != 1 || !(z.residual < 1e-9) || !inside {
                failures.push(json!({ "m": z.m, "winding": winding, "residual": z.residual, "im": z.z.im }));
            }
        }
        Ok((
            failures.is_empty(),
            json!({
                "p": family.p(), "m_hat": m_hat, "m_range": [m_hat + 1, m_hat + count],
                "zeros": zeros.len(), "max_residual": max_residual, "failures": failures,
            }),
        ))
    })
}

pub fn check_rouche(family: &Family, scheme: &RegionScheme, m_hat: i64, count: i64) -> Check {
    timed("rouche", || {
        let mut min_margin = f64::INFINITY;
        let mut boundary_margin = f64::INFINITY;
        let mut failed = Vec::new();
        for m in m_hat + 1..=m_hat + count {
            let r = verify_rouche(family, scheme, m, CONTOUR_SAMPLES)?;
            min_margin = min_margin.min(r.min_margin);
            boundary_margin = boundary_margin.min(r.boundary_margin);
            if !(r.pass && r.boundary_pass) {
                failed.push(m);
            }
        }
        Ok((
            failed.is_empty(),
            json!({
                "p": family.p(), "m_range": [m_hat + 1, m_hat + count], "min_margin": min_margin,
                "boundary_margin": boundary_margin, "failed_m": failed,
            }),
        ))
    })
}

/// Zeros and critical points alternate on V_0; critical values are real with
/// alternating signs.
pub fn check_interlacing(family: &Family, scheme: &RegionScheme, m_hat: i64, count: i64) -> Check {
    timed("interlacing", || {
        let zeros = find_zeros_on_ray(family, scheme, 0, m_hat + 1, m_hat + count)?;
        let crit = find_critical_points_on_ray(family, &zeros)?;
        let alternate = crit
            .iter()
            .enumerate()
            .all(|(i, c)| zeros[i].r < c.r && c.r < zeros[i + 1].r);
        let max_im_ratio = crit.iter().map(|c| c.im_ratio).fold(0.0, f64::max);
        let signs_alternate = crit
            .windows(2)
            .all(|w| w[0].f_value.signum() == -w[1].f_value.signum() && w[0].f_value != 0.0);
        let xs: Vec<f64> = (0..400).map(|i| 0.25 * i as f64).collect();
        let e_da_ok = e_da_pairs(family).iter().all(|&(d, a)| e_da_monotone_on(d, a, &xs));
        Ok((
            alternate && signs_alternate && max_im_ratio <= 1e-8 && e_da_ok,
            json!({
                "p": family.p(), "critical_points": crit.len(), "alternate": alternate,
                "signs_alternate": signs_alternate, "max_im_ratio": max_im_ratio, "e_da_monotone": e_da_ok,
            }),
        ))
    })
}

/// f(L_j(w)) = w to 1e-10 relative and |f'(L_j(w))| > 2 for Re w > 0,
/// |w| in [e^c, e^{2c}], j in −3..=3.
pub fn check_round_trip(br: &Branches, scheme: &RegionScheme, n: usize, seed: u64) -> Check {
    timed("inverse_round_trip", || {
        let family = br.family();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst_residual: f64 = 0.0;
        let mut worst_inv_deriv: f64 = 0.0;
        let mut outside = 0usize;
        for _ in 0..n {
            let log_r = scheme.c + scheme.c * rng.gen::<f64>();
            let arg = PI * (rng.gen::<f64>() - 0.5) * 0.999;
            let w = Complex64::from_polar(libm::exp(log_r), arg);
            let j = rng.gen_range(-3..=3i64);
            let z = br.apply(w, j, None)?;
            let (fz, dfz) = family.f_and_prime(z)?;
            worst_residual = worst_residual.max(cabs(fz - w) / cabs(w));
            worst_inv_deriv = worst_inv_deriv.max(1.0 / cabs(dfz));
            if !br.in_domain(z, j, DOMAIN_TOL) {
                outside += 1;
            }
        }
        Ok((
            worst_residual <= 1e-10 && worst_inv_deriv < 0.5 && outside == 0,
            json!({
                "p": family.p(), "samples": n, "worst_relative_residual": worst_residual,
                "worst_inverse_derivative": worst_inv_deriv, "outside_branch_domain": outside,
            }),
        ))
    })
}

fn shift_error(hp: &mut Hp, rec: &PeriodicPointRecord, shifted: &PeriodicPointRecord) -> f64 {
    let z = hp.from_parts(rec.z, rec.z_lo);
    let fz = hp.f(&z);
    cabs(hp.to_c64(&fz) - shifted.z)
}

fn rotate(word: &[i64]) -> Vec<i64> {
    let mut v = word[1..].to_vec();
    v.push(word[0]);
    v
}

/// Periodic points of every word of length ≤ max_len over ±{1..K}, plus
/// random words of length ≤ 4 for the shift conjugacy.
pub fn check_periodic(br: &Branches, scheme: &RegionScheme, k: u32, max_len: usize, seed: u64) -> Check {
    timed("periodic_points", || {
        let family = br.family();
        let words = all_words(k as i64, max_len);
        let solve = |w: &Vec<i64>| periodic_point_with(br, scheme, w, 1e-14);
        let recs: Vec<PeriodicPointRecord> = words.par_iter().map(solve).collect::<Result<_>>()?;
        let by_word: HashMap<&[i64], &PeriodicPointRecord> =
            words.iter().map(|w| w.as_slice()).zip(recs.iter()).collect();
        let mut hp = Hp::new(family.params(), DEFAULT_PREC);
        let mut max_closure: f64 = 0.0;
        let mut min_multiplier = f64::INFINITY;
        let mut max_shift: f64 = 0.0;
        let mut itinerary_mismatch = Vec::new();
        let mut outside_trapezium = 0usize;
        for (w, rec) in words.iter().zip(&recs) {
            max_closure = max_closure.max(rec.closure_residual);
            min_multiplier = min_multiplier.min(cabs(rec.multiplier));
            max_shift = max_shift.max(shift_error(&mut hp, rec, by_word[rotate(w).as_slice()]));
            let digits: Vec<Option<i64>> = rec.orbit.iter().map(|&z| strip_index(z).ok()).collect();
            if digits.iter().zip(w).any(|(d, s)| *d != Some(*s)) {
                itinerary_mismatch.push(rec.itinerary.to_string());
            }
            for (i, &z) in rec.orbit.iter().enumerate() {
                if !scheme.trapezium(w[i])?.contains(z, 1e-9) {
                    outside_trapezium += 1;
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random: Vec<Vec<i64>> = (0..50)
            .map(|_| {
                let len = rng.gen_range(1..=4usize);
                (0..len)
                    .map(|_| {
                        let s = rng.gen_range(1..=k as i64);
                        if rng.gen::<bool>() { s } else { -s }
                    })
                    .collect()
            })
            .collect();
        let pairs: Vec<(PeriodicPointRecord, PeriodicPointRecord)> = random
            .par_iter()
            .map(|w| Ok((solve(w)?, solve(&rotate(w))?)))
            .collect::<Result<_>>()?;
        let max_conjugacy = pairs
            .iter()
            .map(|(a, b)| shift_error(&mut hp, a, b))
            .fold(0.0, f64::max);

        let pass = max_closure < 1e-9
            && min_multiplier > 1.0
            && max_shift < 1e-8
            && max_conjugacy < 1e-8
            && itinerary_mismatch.is_empty()
            && outside_trapezium == 0;
        Ok((
            pass,
            json!({
                "p": family.p(), "c": scheme.c, "words": words.len(), "max_closure_residual": max_closure,
                "min_multiplier_modulus": min_multiplier, "max_shift_error": max_shift,
                "random_words": random.len(), "max_conjugacy_error": max_conjugacy,
                "itinerary_mismatch": itinerary_mismatch, "orbit_points_outside_trapezium": outside_trapezium,
            }),
        ))
    })
}

/// The itineraries traced by the hair and fast-escape checks.
pub fn hair_itineraries(k: u32) -> Vec<ItinerarySpec> {
    ["1", "-1", "2", "-2", "3", "1,-1", "2,1", "-3,2", "1,2,3", "-1,-2,3"]
        .iter()
        .map(|s| ItinerarySpec::parse(s, k.max(3)).expect("fixed itinerary"))
        .collect()
}

const SEMICONJUGACY_T: [f64; 9] = [1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 12.0, 20.0, 30.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Semiconjugacy {
    /// |w − h_{σs}(E(t))| / max(1, |h_{σs}(E(t))|), w the point with h_s(t) = L_{s_0}(w).
    pub level_one_error: f64,
    /// The same comparison with w replaced by f(h_s(t)) evaluated in f64.
    pub forward_error: f64,
    /// Rounding of h_s(t) to f64 propagated through f: 4 u |h| |f'(h)| / max(1, |g|).
    pub forward_allowance: f64,
}

/// f ∘ h_s(t) against h_{σs}(E(t)). Near the zero rays f is a sum of large
/// cancelling terms, so the f64 forward value carries an error of order
/// u |h| |f'(h)|; the level-one chain value avoids that loss.
pub fn semiconjugacy(br: &Branches, s: &ItinerarySpec, t: f64) -> Result<Semiconjugacy> {
    let family = br.family();
    let h = hair_point(br, s, t, 1e-13, DEFAULT_N_MAX)?;
    let g = hair_point(br, &s.shift(), e_map(t), 1e-13, DEFAULT_N_MAX)?;
    let scale = cabs(g.z).max(1.0);
    let w = h.chain.get(1).copied().unwrap_or(Complex64::new(e_map(t), 0.0));
    let (fz, dfz) = family.f_and_prime(h.z)?;
    Ok(Semiconjugacy {
        level_one_error: cabs(w - g.z) / scale,
        forward_error: cabs(fz - g.z) / scale,
        forward_allowance: 4.0 * f64::EPSILON * cabs(h.z) * cabs(dfz) / scale,
    })
}

pub fn check_hairs(br: &Branches, scheme: &RegionScheme, cal: &HairCalibration, itineraries: &[ItinerarySpec]) -> Check {
    timed("hairs", || {
        let family = br.family();
        let mut rows = Vec::new();
        let mut all = true;
        for s in itineraries {
            let curve = trace_hair(br, s, 30.0, 32, 1e-12, 0.5)?;
            let rep = verify_hair_properties(&curve, br, scheme, cal, 6)?;
            let max_bound_excess = curve
                .samples
                .iter()
                .filter(|x| x.t >= cal.q_hat + 1.0)
                .map(|x| (x.z.re - x.t).abs() - cal.m_hat)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut semi: f64 = 0.0;
            let mut forward_excess = f64::NEG_INFINITY;
            for &t in &SEMICONJUGACY_T {
                let sc = semiconjugacy(br, s, t)?;
                semi = semi.max(sc.level_one_error);
                forward_excess = forward_excess.max(sc.forward_error - 1e-6 - sc.forward_allowance);
            }
            let ok = rep.pass() && max_bound_excess <= 0.0 && semi <= 1e-6 && forward_excess <= 0.0;
            all &= ok;
            rows.push(json!({
                "itinerary": s.to_string(), "pass": ok, "samples": curve.samples.len(), "report": rep,
                "max_bound_excess": max_bound_excess, "semiconjugacy_error": semi,
                "forward_excess": forward_excess,
            }));
        }
        Ok((all, json!({ "p": family.p(), "calibration": cal, "hairs": rows })))
    })
}

pub fn check_fast_escape(br: &Branches, itineraries: &[ItinerarySpec]) -> Check {
    timed("fast_escape", || {
        let family = br.family();
        let table = build_m_table(family, FAST_ESCAPE_R, 6)?;
        let mut rows = Vec::new();
        let mut hairs_ok = true;
        for s in itineraries {
            let h = hair_point(br, s, 10.0, 1e-12, DEFAULT_N_MAX)?;
            let r = fast_escape_test(family, &table, h.z, 2, 4)?;
            hairs_ok &= r.qualifies && r.l.is_some_and(|l| l <= 2);
            rows.push(json!({ "itinerary": s.to_string(), "z": [h.z.re, h.z.im], "result": r }));
        }
        let origin = fast_escape_test(family, &table, Complex64::new(0.0, 0.0), 2, 4)?;
        // for p ≥ 4 the orbit 0 → p → f(p) runs up the positive real axis
        // and really does meet the bounds, so only p = 3 expects a refusal
        let origin_ok = family.p() != 3 || !origin.qualifies;
        Ok((
            hairs_ok && origin_ok,
            json!({ "p": family.p(), "R": FAST_ESCAPE_R, "hair_samples": rows, "origin": origin }),
        ))
    })
}

/// Re f < 0 on Y±_m, annulus containment and sign changes on S⁴ at the
/// dynamics c; for p = 3 also the annulus ratio at c = 40.
pub fn check_covering(family: &Family, scheme: &RegionScheme, k: u32, m_hat: i64) -> Check {
    timed("covering", || {
        let rep = verify_covering(family, scheme.c, k, (m_hat + 1, m_hat + 10), 25);
        let at40 = verify_covering(family, 40.0, k, (m_hat + 1, m_hat + 1), 256);
        let bound40 = annulus_ratio_bound(family.p(), k, 40.0);
        let ratio_ok = at40.annulus_ratio <= bound40 * (1.0 + 1e-9) && (family.p() != 3 || at40.annulus_ratio < 1e-3);
        Ok((
            rep.pass() && ratio_ok,
            json!({ "p": family.p(), "report": rep, "ratio_at_c40": at40.annulus_ratio, "bound_at_c40": bound40 }),
        ))
    })
}

/// |f'| > 2 and |z f'/f| > 2 on sampled T_0(ν), and the largest grid ε̂ with
/// |f(z)| > max(e^{ε̂ν}, M(ε̂|z|)) at every sample.
pub fn check_expansion(family: &Family, scheme: &RegionScheme, n: usize) -> Check {
    timed("expansion", || {
        let mut pts = scheme.t0_boundary_samples(n);
        pts.extend(scheme.t0_interior_samples(n));
        let mut min_log_deriv = f64::INFINITY;
        let mut min_log_ratio = f64::INFINITY;
        let mut log_f = Vec::with_capacity(pts.len());
        for &z in &pts {
            let (shift, fs, fps) = family.scaled_with_prime(z);
            min_log_deriv = min_log_deriv.min(shift + libm::log(cabs(fps)));
            min_log_ratio = min_log_ratio.min(libm::log(cabs(z) * cabs(fps) / cabs(fs)));
            log_f.push(shift + libm::log(cabs(fs)));
        }
        let r_max = pts.iter().map(|z| cabs(*z)).fold(0.0, f64::max);
        const GRID: usize = 256;
        let log_m: Vec<f64> = (0..=GRID)
            .map(|i| family.log_max_modulus(r_max * i as f64 / GRID as f64, 1e-12))
            .collect();
        // M is increasing, so the next grid radius gives an upper value
        let log_m_above = |r: f64| log_m[((r / r_max * GRID as f64).ceil() as usize).min(GRID)];
        let holds = |eps: f64| {
            pts.iter()
                .zip(&log_f)
                .all(|(z, &lf)| lf > eps * scheme.nu && lf > log_m_above(eps * cabs(*z)))
        };
        let eps_hat = (1..100).map(|i| i as f64 / 100.0).take_while(|&e| holds(e)).last();
        let ln2 = std::f64::consts::LN_2;
        Ok((
            min_log_deriv > ln2 && min_log_ratio > ln2 && eps_hat.is_some(),
            json!({
                "p": family.p(), "samples": pts.len(), "min_abs_derivative": libm::exp(min_log_deriv),
                "min_log_derivative_ratio": libm::exp(min_log_ratio), "epsilon_hat": eps_hat,
            }),
        ))
    })
}

/// The default render window.
pub fn default_window() -> Window {
    Window::new(-8.0, 8.0, -8.0, 8.0).expect("fixed window")
}

pub fn check_render_determinism(family: &Family, scheme: &RegionScheme, size: usize, workers: &[usize]) -> Check {
    timed("render_determinism", || {
        let spec = GridSpec {
            window: default_window(),
            width: size,
            height: size,
            max_iter: 50,
            escape_radius: libm::exp(scheme.c),
        };
        let hashes: Vec<String> = workers
            .iter()
            .map(|&w| Ok(sha256_hex(&ppm_bytes(&classify_grid(family, scheme, &spec, w)?, &Palette::default()))))
            .collect::<Result<_>>()?;
        Ok((
            hashes.windows(2).all(|h| h[0] == h[1]),
            json!({ "size": size, "workers": workers, "hashes": hashes }),
        ))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub p: usize,
    pub lambda: f64,
    pub k: u32,
    pub seed: u64,
    pub scheme: RegionScheme,
    pub dynamics_c: Option<f64>,
    pub m_hat: Option<i64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

/// Runs every check for the scheme's family. A scheme that breaks its own
/// invariants stops the run after the invariant check.
pub fn run_suite(scheme: &RegionScheme, k: u32, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport {
        p: scheme.p,
        lambda: scheme.lambda,
        k,
        seed,
        scheme: *scheme,
        dynamics_c: None,
        m_hat: None,
        checks: vec![check_scheme(scheme)],
        pass: false,
    };
    if !report.checks[0].pass {
        return Ok(report);
    }
    let family = scheme.family()?;
    let m_hat = m_hat(&family, scheme)?;
    let dynamics = dynamics_scheme(scheme, k)?;
    let br = Branches::new(&family);
    report.m_hat = Some(m_hat);
    report.dynamics_c = Some(dynamics.c);
    let itineraries = hair_itineraries(k);
    let checks = &mut report.checks;
    checks.push(check_symmetry(&family, 1000, seed));
    checks.push(check_g_identity(&family, 100, seed.wrapping_add(1)));
    checks.push(check_expansion(&family, scheme, 4000));
    checks.push(check_zeros(&family, scheme, m_hat, 20));
    checks.push(check_rouche(&family, scheme, m_hat, 20));
    checks.push(check_interlacing(&family, scheme, m_hat, 20));
    checks.push(check_covering(&family, &dynamics, k, m_hat));
    checks.push(check_round_trip(&br, &dynamics, 1000, seed.wrapping_add(2)));
    checks.push(check_periodic(&br, &dynamics, k, 3, seed.wrapping_add(3)));
    match calibrate(&br, k, 1e-12) {
        Ok(cal) => checks.push(check_hairs(&br, &dynamics, &cal, &itineraries)),
        Err(e) => checks.push(Check {
            name: "hairs".into(),
            pass: false,
            seconds: 0.0,
            detail: json!({ "error": e.to_string() }),
        }),
    }
    checks.push(check_fast_escape(&br, &itineraries));
    checks.push(check_render_determinism(&family, scheme, 96, &[1, 4]));
    report.pass = report.checks.iter().all(|c| c.pass);
    Ok(report)
}
