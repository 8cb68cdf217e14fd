use std::f64::consts::PI;

use bouquet_lab::family::{Family, FamilyParams};
use bouquet_lab::geometry::{strip_index, RegionScheme};
use bouquet_lab::symbolic::{Branches, ItinerarySpec};
use num_complex::Complex64;
use proptest::prelude::*;

fn family(p: usize) -> Family {
    Family::with_p(p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rotation_by_a_root_of_unity_fixes_f(p in 3usize..=7, re in -15.0..15.0f64, im in -15.0..15.0f64, k in 0i64..7) {
        let fam = family(p);
        let z = Complex64::new(re, im);
        let a = fam.f(z).unwrap();
        let b = fam.f(fam.root(k) * z).unwrap();
        prop_assert!((b - a).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn conjugation_commutes_with_real_lambda(p in 3usize..=6, lambda in 0.1..10.0f64, re in -10.0..10.0f64, im in -10.0..10.0f64) {
        let fam = Family::new(FamilyParams::new(p, lambda).unwrap()).unwrap();
        let z = Complex64::new(re, im);
        let a = fam.f(z.conj()).unwrap();
        let b = fam.f(z).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn epsilon_reconstructs_f(p in 3usize..=6, re in -5.0..5.0f64, im in -5.0..5.0f64) {
        let fam = family(p);
        let z = Complex64::new(re, im);
        let rebuilt = z.exp() * (Complex64::new(1.0, 0.0) + fam.epsilon(z).unwrap());
        let f = fam.f(z).unwrap();
        prop_assert!((rebuilt - f).norm() <= 1e-10 * (1.0 + f.norm()));
    }

    #[test]
    fn strip_index_shifts_with_period(re in -50.0..50.0f64, frac in 0.01..0.99f64, base in -20i64..20, shift in -20i64..20) {
        let im = (2 * base - 1) as f64 * PI + frac * 2.0 * PI;
        let z = Complex64::new(re, im);
        let k = strip_index(z).unwrap();
        prop_assert_eq!(k, base);
        let moved = z + Complex64::new(0.0, 2.0 * PI * shift as f64);
        prop_assert_eq!(strip_index(moved).unwrap(), base + shift);
    }

    #[test]
    fn itinerary_text_round_trips(pre in prop::collection::vec(-3i64..=3, 0..4), per in prop::collection::vec(-3i64..=3, 1..4)) {
        prop_assume!(pre.iter().chain(per.iter()).all(|&d| d != 0));
        let spec = ItinerarySpec::new(pre, per, 3).unwrap();
        let back: ItinerarySpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(back.to_string(), spec.to_string());
        for n in 0..10 {
            prop_assert_eq!(back.digit(n), spec.digit(n));
            prop_assert_eq!(spec.shift().digit(n), spec.digit(n + 1));
            prop_assert_eq!(spec.negated().digit(n), -spec.digit(n));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn inverse_branches_invert_f(log_r in 0.0..1.0f64, arg in -0.49..0.49f64, j in -3i64..=3) {
        let params = FamilyParams::new(3, 1.0).unwrap();
        let scheme = RegionScheme::defaults(params).unwrap();
        let fam = Family::new(params).unwrap();
        let br = Branches::new(&fam);
        let c = bouquet_lab::symbolic::calibrate_c(&scheme, 3).unwrap();
        let w = Complex64::from_polar((c * (1.0 + log_r)).exp(), arg * PI);
        let z = br.apply(w, j, None).unwrap();
        let fz = fam.f(z).unwrap();
        prop_assert!((fz - w).norm() <= 1e-10 * w.norm());
        prop_assert!(br.in_domain(z, j, 1e-9));
    }
}
