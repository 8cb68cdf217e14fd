//! Acceptance run: one PASS/FAIL line per criterion, each with its runtime
//! limit. Exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bouquet_lab::escape::{classify_grid, ppm_bytes, sha256_hex, GridSpec, Palette};
use bouquet_lab::family::{Family, FamilyParams};
use bouquet_lab::geometry::RegionScheme;
use bouquet_lab::hair::calibrate;
use bouquet_lab::suite::{self, Check};
use bouquet_lab::symbolic::{dynamics_scheme, Branches};

/// SHA-256 of the PPM for p = 3, window [−8, 8]², 512², max_iter 50, radius e^c,
/// default palette. Frozen from the first reference run.
const GOLDEN_RENDER: &str = "d9184f1bf75bcd84be3c87d508bf2c007e96259ab1205e99db223c59a2291dda";

const SEED: u64 = 20240601;

struct Setup {
    family: Family,
    scheme: RegionScheme,
    dynamics: RegionScheme,
    branches: Branches,
    m_hat: i64,
}

fn setup(p: usize) -> Setup {
    let params = FamilyParams::new(p, 1.0).expect("params");
    let scheme = RegionScheme::defaults(params).expect("scheme");
    let family = Family::new(params).expect("family");
    let m_hat = suite::m_hat(&family, &scheme).expect("M calibration");
    Setup {
        dynamics: dynamics_scheme(&scheme, 3).expect("dynamics scheme"),
        branches: Branches::new(&family),
        family,
        scheme,
        m_hat,
    }
}

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Vec<Check>,
}

fn symmetry() -> Vec<Check> {
    [3, 4, 5, 6]
        .iter()
        .map(|&p| suite::check_symmetry(&Family::with_p(p).unwrap(), 1000, SEED + p as u64))
        .collect()
}

fn g_identity() -> Vec<Check> {
    [3, 4, 5]
        .iter()
        .map(|&p| suite::check_g_identity(&Family::with_p(p).unwrap(), 100, SEED + p as u64))
        .collect()
}

fn zeros() -> Vec<Check> {
    [3, 4, 5]
        .iter()
        .map(|&p| {
            let s = setup(p);
            suite::check_zeros(&s.family, &s.scheme, s.m_hat, 20)
        })
        .collect()
}

fn rouche() -> Vec<Check> {
    [3, 4, 5]
        .iter()
        .map(|&p| {
            let s = setup(p);
            suite::check_rouche(&s.family, &s.scheme, s.m_hat, 20)
        })
        .collect()
}

fn interlacing() -> Vec<Check> {
    [3, 4, 5]
        .iter()
        .map(|&p| {
            let s = setup(p);
            suite::check_interlacing(&s.family, &s.scheme, s.m_hat, 20)
        })
        .collect()
}

fn round_trip() -> Vec<Check> {
    let s = setup(3);
    vec![suite::check_round_trip(&s.branches, &s.dynamics, 1000, SEED)]
}

fn periodic() -> Vec<Check> {
    let s = setup(3);
    vec![suite::check_periodic(&s.branches, &s.dynamics, 3, 3, SEED)]
}

fn hairs() -> Vec<Check> {
    let s = setup(3);
    let cal = calibrate(&s.branches, 3, 1e-12).expect("hair calibration");
    vec![suite::check_hairs(&s.branches, &s.dynamics, &cal, &suite::hair_itineraries(3))]
}

fn covering() -> Vec<Check> {
    let s = setup(3);
    vec![suite::check_covering(&s.family, &s.dynamics, 3, s.m_hat)]
}

fn fast_escape() -> Vec<Check> {
    let s = setup(3);
    vec![suite::check_fast_escape(&s.branches, &suite::hair_itineraries(3))]
}

fn render() -> Vec<Check> {
    let s = setup(3);
    let mut checks = vec![suite::check_render_determinism(&s.family, &s.scheme, 512, &[1, 4, 8])];
    let spec = GridSpec {
        window: suite::default_window(),
        width: 512,
        height: 512,
        max_iter: 50,
        escape_radius: libm::exp(s.scheme.c),
    };
    let hashes: Vec<String> = (0..2)
        .map(|_| {
            let grid = classify_grid(&s.family, &s.scheme, &spec, 4).expect("grid");
            sha256_hex(&ppm_bytes(&grid, &Palette::default()))
        })
        .collect();
    checks.push(Check {
        name: "golden_render".into(),
        pass: hashes.iter().all(|h| h == GOLDEN_RENDER),
        seconds: 0.0,
        detail: serde_json::json!({ "hashes": hashes, "golden": GOLDEN_RENDER }),
    });
    checks
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "symmetry suite", limit: Duration::from_secs(1), run: symmetry },
        Criterion { name: "reduced-function identity", limit: Duration::from_secs(1), run: g_identity },
        Criterion { name: "zero localization", limit: Duration::from_secs(30), run: zeros },
        Criterion { name: "rouche margin", limit: Duration::from_secs(20), run: rouche },
        Criterion { name: "interlacing", limit: Duration::from_secs(30), run: interlacing },
        Criterion { name: "inverse-branch round trip", limit: Duration::from_secs(5), run: round_trip },
        Criterion { name: "periodic points", limit: Duration::from_secs(10), run: periodic },
        Criterion { name: "hair suite", limit: Duration::from_secs(60), run: hairs },
        Criterion { name: "covering inequalities", limit: Duration::from_secs(5), run: covering },
        Criterion { name: "fast escape", limit: Duration::from_secs(5), run: fast_escape },
        Criterion { name: "renderer determinism", limit: Duration::from_secs(30), run: render },
    ];
    let mut failed = 0;
    for c in &criteria {
        let t0 = Instant::now();
        let checks = (c.run)();
        let elapsed = t0.elapsed();
        let in_time = elapsed <= c.limit;
        let pass = in_time && checks.iter().all(|x| x.pass);
        println!(
            "{} {} ({:.2} s, limit {} s)",
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
            c.limit.as_secs()
        );
        if !pass {
            failed += 1;
            if !in_time {
                println!("    over the runtime limit");
            }
            for x in checks.iter().filter(|x| !x.pass) {
                println!("    {}: {}", x.name, x.detail);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
