mod common;

use common::{approx_reference, beta_reference, coverage_reference, disk, paper_radio, rho_reference};
use infrashare::coverage::{self, AsymptoticLimit};
use infrashare::{Assumption, OperatorProfile, RadioParams, SharingScenario};
use proptest::prelude::*;

fn op(id: usize, count: f64) -> OperatorProfile {
    OperatorProfile::new(id, disk(count)).unwrap()
}

fn scenario(l0: f64, sellers: &[f64], assumption: Assumption) -> SharingScenario {
    let ops: Vec<_> = sellers.iter().enumerate().map(|(i, &c)| op(i + 1, c)).collect();
    SharingScenario::full_sharing(op(0, l0), &ops, assumption).unwrap()
}

#[test]
fn rho_matches_reference_quadrature() {
    for &(t, alpha) in &[(100.0, 5.0), (10f64.powf(0.5), 3.0), (0.1, 4.0), (10.0, 3.5), (1000.0, 6.0)] {
        let lib = coverage::rho(t, alpha).unwrap();
        let oracle = rho_reference(t, alpha);
        assert!((lib - oracle).abs() <= 1e-8 * oracle, "T={t} alpha={alpha}: {lib} vs {oracle}");
    }
}

#[test]
fn interference_limited_ceiling_near_twelve_percent() {
    let b = coverage::beta(&paper_radio()).unwrap();
    assert!((1.0 / b - 0.12).abs() < 0.005, "1/beta = {}", 1.0 / b);
    assert!((1.0 / b - 1.0 / beta_reference(&paper_radio())).abs() < 1e-9);
}

#[test]
fn exact_coverage_matches_reference_integral() {
    let radios = [
        paper_radio(),
        RadioParams::new(10f64.powf(0.5), 3.0, 1e-13, 1e-3).unwrap(),
        RadioParams::new(0.1, 4.0, 1e-13, 1e-6).unwrap(),
    ];
    for radio in &radios {
        for sc in [
            scenario(1.0, &[], Assumption::AllBsServe),
            scenario(1.0, &[2.0, 0.5], Assumption::AllBsServe),
            scenario(1.0, &[2.0, 0.5], Assumption::FractionalActivity),
        ] {
            let lib = coverage::coverage_exact(&sc, radio).unwrap();
            let oracle = coverage_reference(sc.association_intensity(), sc.interference_intensity(), radio);
            assert!((lib - oracle).abs() <= 1e-7 * oracle.max(1e-12), "{lib} vs {oracle}");
            let a_lib = coverage::coverage_approx(&sc, radio).unwrap();
            let a_ref = approx_reference(sc.association_intensity(), sc.interference_intensity(), radio);
            assert!((a_lib - a_ref).abs() <= 1e-8, "{a_lib} vs {a_ref}");
        }
    }
}

#[test]
fn buyer_intensity_limit_is_inverse_beta() {
    let radio = paper_radio();
    let b = coverage::beta(&radio).unwrap();
    for assumption in [Assumption::AllBsServe, Assumption::FractionalActivity] {
        let mut prev = 0.0;
        for k in 0..7 {
            let l0 = 10f64.powi(k);
            let p = coverage::coverage_approx(&scenario(l0, &[1.0, 2.0], assumption), &radio).unwrap();
            if assumption == Assumption::AllBsServe {
                assert!(p >= prev - 1e-12);
            }
            prev = p;
        }
        assert!((prev - 1.0 / b).abs() < 1e-3 * (1.0 / b));
        let lim = coverage::coverage_asymptote(&scenario(1.0, &[1.0], assumption), &radio, AsymptoticLimit::Lambda0ToInf).unwrap();
        assert!((lim - 1.0 / b).abs() < 1e-15);
    }
}

#[test]
fn equal_sellers_raise_fractional_coverage() {
    let radio = paper_radio();
    let mut prev = 0.0;
    for n in 0..8 {
        let p = coverage::coverage_approx(&scenario(1.0, &vec![1.0; n], Assumption::FractionalActivity), &radio).unwrap();
        assert!(p > prev);
        prev = p;
    }
}

fn radio_strategy() -> impl Strategy<Value = RadioParams> {
    (-15.0..25.0f64, 2.5..6.0f64, -160.0..-90.0f64, -60.0..40.0f64).prop_map(|(t_db, alpha, n_dbm, p_dbm)| {
        RadioParams::new(
            10f64.powf(t_db / 10.0),
            alpha,
            1e-3 * 10f64.powf(n_dbm / 10.0),
            1e-3 * 10f64.powf(p_dbm / 10.0),
        )
        .unwrap()
    })
}

fn sellers_strategy() -> impl Strategy<Value = (f64, Vec<f64>)> {
    (0.05..20.0f64, prop::collection::vec(0.05..20.0f64, 0..5))
}

proptest! {
    #![proptest_config(common::cases(64))]

    #[test]
    fn coverage_is_a_probability_below_the_ceiling(radio in radio_strategy(), (l0, s) in sellers_strategy()) {
        let b = coverage::beta(&radio).unwrap();
        let sc = scenario(l0, &s, Assumption::AllBsServe);
        let e = coverage::coverage_exact(&sc, &radio).unwrap();
        let a = coverage::coverage_approx(&sc, &radio).unwrap();
        prop_assert!((0.0..=1.0 / b + 1e-12).contains(&e));
        prop_assert!((0.0..=1.0 / b + 1e-12).contains(&a));
    }

    #[test]
    fn fractional_activity_never_hurts(radio in radio_strategy(), (l0, s) in sellers_strategy()) {
        let all = coverage::coverage_exact(&scenario(l0, &s, Assumption::AllBsServe), &radio).unwrap();
        let frac = coverage::coverage_exact(&scenario(l0, &s, Assumption::FractionalActivity), &radio).unwrap();
        prop_assert!(frac >= all - 1e-12);
    }

    #[test]
    fn coverage_falls_with_threshold(radio in radio_strategy(), (l0, s) in sellers_strategy(), step in 1.01..3.0f64) {
        let sc = scenario(l0, &s, Assumption::FractionalActivity);
        let lo = coverage::coverage_exact(&sc, &radio).unwrap();
        let hi = coverage::coverage_exact(&sc, &radio.with_threshold(radio.threshold * step)).unwrap();
        prop_assert!(hi <= lo + 1e-12);
    }

    #[test]
    fn coverage_falls_with_noise_and_rises_with_power(radio in radio_strategy(), (l0, s) in sellers_strategy(), step in 1.01..10.0f64) {
        let sc = scenario(l0, &s, Assumption::AllBsServe);
        let base = coverage::coverage_exact(&sc, &radio).unwrap();
        let noisy = coverage::coverage_exact(&sc, &radio.with_noise_power(radio.noise_power * step)).unwrap();
        let loud = coverage::coverage_exact(&sc, &radio.with_tx_power(radio.tx_power * step)).unwrap();
        prop_assert!(noisy <= base + 1e-12);
        prop_assert!(loud >= base - 1e-12);
    }
}
