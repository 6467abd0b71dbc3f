mod common;

use std::collections::BTreeMap;

use common::{disk, exhaustive_purchase, paper_radio, shared_coverage};
use infrashare::buyer::{
    check_21_futility, feasibility_22, greedy_select, solve_fractions, FractionMethod, PurchaseProblem, SellerOffer,
};
use infrashare::coverage;
use infrashare::tradeoff::QosTarget;
use infrashare::RadioParams;
use proptest::prelude::*;

fn offers(counts: &[f64], prices: &[f64]) -> Vec<SellerOffer> {
    counts
        .iter()
        .zip(prices)
        .enumerate()
        .map(|(i, (&c, &q))| SellerOffer {
            id: i + 1,
            intensity: disk(c),
            price: q,
        })
        .collect()
}

// Transmit power scaled so the noise-equivalent intensity is `count` per disk.
fn noisy_radio(count: f64) -> RadioParams {
    let radio = paper_radio();
    let scale = coverage::noise_intensity(&radio) / disk(count);
    radio.with_tx_power(radio.tx_power * scale.powf(2.5))
}

#[test]
fn futility_at_the_operating_point() {
    let radio = paper_radio();
    let strict = check_21_futility(&radio, &QosTarget::new(0.1).unwrap()).unwrap();
    assert!(strict.futile);
    assert!((strict.bound - 0.12).abs() < 0.005);
    assert!(strict.min_intensity.is_none());
    let loose = check_21_futility(&radio, &QosTarget::new(0.95).unwrap()).unwrap();
    assert!(!loose.futile);
    assert!(loose.min_intensity.unwrap() > 0.0);
    let limit = check_21_futility(&radio, &QosTarget::new(1.0 - 1e-9).unwrap()).unwrap();
    assert!(!limit.futile);
}

#[test]
fn feasibility_edge_cases() {
    let qos = QosTarget::new(0.95).unwrap();
    let none = BTreeMap::new();
    let big = PurchaseProblem::new(disk(1e4), offers(&[10.0], &[1.0]), noisy_radio(1.0), qos).unwrap();
    let f = feasibility_22(&big, &none).unwrap();
    assert!(f.feasible && f.slack > 0.0);
    let empty = PurchaseProblem::new(0.0, offers(&[10.0], &[1.0]), noisy_radio(1.0), qos).unwrap();
    let f = feasibility_22(&empty, &none).unwrap();
    assert!(!f.feasible && f.lhs == 0.0 && f.rhs > 0.0);
}

#[test]
fn six_sellers_saturate_at_strict_target() {
    // every seller bought in full still misses 0.9 coverage, so the
    // purchased fraction sits at its maximum
    let qos = QosTarget::new(0.1).unwrap();
    let p = PurchaseProblem::new(disk(5.0), offers(&[10.0; 6], &[450.0; 6]), paper_radio(), qos).unwrap();
    let all: BTreeMap<usize, f64> = (1..=6).map(|i| (i, 1.0)).collect();
    assert!(!feasibility_22(&p, &all).unwrap().feasible);
    let sol = greedy_select(&p).unwrap();
    assert!(!sol.feasible);
    assert_eq!(sol.selected.len(), 6);
    assert!(sol.fractions.values().all(|&x| x == 1.0));
    assert!(sol.achieved_coverage < 0.9);
}

#[test]
fn kkt_gradient_vanishes_for_free_coordinates() {
    let qos = QosTarget::new(0.8).unwrap();
    let p = PurchaseProblem::new(disk(10.0), offers(&[10.0], &[450.0]), noisy_radio(5.0), qos).unwrap();
    let sol = solve_fractions(&p, &[1]).unwrap();
    assert!(sol.mu > 0.0, "{sol:?}");
    let lambda = disk(20.0);
    let k = (p.beta() - 1.0) * (1.0 - qos.epsilon);
    let s = &p.sellers()[0];
    let x = sol.fractions[&1];
    assert!(x > 0.0 && x < 1.0);
    let grad = s.price + s.intensity / sol.mu - 2.0 * s.intensity * s.intensity * x * k / (sol.mu * lambda);
    assert!(grad.abs() < 1e-8 * s.price, "gradient {grad}");
}

#[test]
fn exhaustive_grid_gap_report() {
    let radio = noisy_radio(5.0);
    let cases: [(f64, &[f64], &[f64], f64); 5] = [
        (10.0, &[10.0], &[450.0], 0.8),
        (10.0, &[10.0, 12.0], &[450.0, 600.0], 0.8),
        (4.0, &[6.0, 8.0, 3.0], &[100.0, 120.0, 30.0], 0.75),
        (2.0, &[5.0, 5.0, 5.0, 5.0], &[10.0, 20.0, 30.0, 40.0], 0.7),
        (5.0, &[10.0, 2.0, 7.0, 4.0], &[50.0, 5.0, 30.0, 25.0], 0.72),
    ];
    for (l0, counts, prices, eps) in cases {
        let qos = QosTarget::new(eps).unwrap();
        let p = PurchaseProblem::new(disk(l0), offers(counts, prices), radio, qos).unwrap();
        let greedy = greedy_select(&p).unwrap();
        let sellers: Vec<(f64, f64)> = p.sellers().iter().map(|s| (s.intensity, s.price)).collect();
        let grid = exhaustive_purchase(disk(l0), &sellers, &radio, eps, 0.05);
        match (&grid, greedy.feasible) {
            (Some(g), true) => {
                let purchased: Vec<f64> = p
                    .sellers()
                    .iter()
                    .map(|s| s.intensity * greedy.fractions.get(&s.id).copied().unwrap_or(0.0))
                    .collect();
                let pc = shared_coverage(disk(l0), &purchased, &radio, p.beta(), p.theta());
                assert!(pc >= 1.0 - eps - 1e-9, "greedy point misses the target: {pc}");
                println!(
                    "K={} eps={eps}: greedy {:.4} grid {:.4} gap {:+.4}",
                    counts.len(),
                    greedy.total_cost,
                    g.cost,
                    greedy.total_cost - g.cost
                );
            }
            (Some(g), false) => println!("K={} eps={eps}: greedy infeasible, grid {:.4}", counts.len(), g.cost),
            (None, feasible) => {
                assert!(!feasible || greedy.selected.is_empty() || greedy.total_cost >= 0.0);
                println!("K={} eps={eps}: no feasible grid point, greedy feasible={feasible}", counts.len());
            }
        }
    }
}

#[test]
fn demand_falls_as_tolerance_grows() {
    for k in [2, 4, 6] {
        let mut prev = f64::INFINITY;
        for i in 1..=10 {
            let eps = 0.05 * i as f64;
            let qos = QosTarget::new(eps).unwrap();
            let p = PurchaseProblem::new(disk(5.0), offers(&vec![10.0; k], &vec![450.0; k]), paper_radio(), qos).unwrap();
            let sol = greedy_select(&p).unwrap();
            assert!(sol.purchased_intensity <= prev * (1.0 + 1e-12), "K={k} eps={eps}");
            prev = sol.purchased_intensity;
        }
    }
}

#[test]
fn evaluations_bounded_by_k_squared() {
    let qos = QosTarget::new(0.1).unwrap();
    for k in 1..=8 {
        let p = PurchaseProblem::new(disk(1.0), offers(&vec![3.0; k], &vec![10.0; k]), paper_radio(), qos).unwrap();
        let sol = greedy_select(&p).unwrap();
        assert!(sol.fraction_evaluations <= k * k);
        assert_eq!(sol.fraction_evaluations, k * (k + 1) / 2);
    }
}

#[test]
fn tight_root_has_coverage_at_target() {
    let qos = QosTarget::new(0.8).unwrap();
    let p = PurchaseProblem::new(disk(10.0), offers(&[10.0], &[450.0]), noisy_radio(5.0), qos).unwrap();
    let sol = solve_fractions(&p, &[1]).unwrap();
    assert_eq!(sol.method, FractionMethod::RootSolved);
    let pc = coverage::coverage_approx(&p.scenario(&sol.fractions).unwrap(), p.radio()).unwrap();
    assert!((pc - 0.2).abs() < 1e-6);
}

fn problem_strategy() -> impl Strategy<Value = (f64, Vec<(f64, f64)>, f64, f64)> {
    (
        0.5..15.0f64,
        prop::collection::vec((0.5..15.0f64, 1.0..500.0f64), 1..6),
        0.55..0.95f64,
        0.5..20.0f64,
    )
}

fn build(l0: f64, sellers: &[(f64, f64)], eps: f64, noise: f64) -> PurchaseProblem {
    let (counts, prices): (Vec<f64>, Vec<f64>) = sellers.iter().copied().unzip();
    PurchaseProblem::new(disk(l0), offers(&counts, &prices), noisy_radio(noise), QosTarget::new(eps).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(common::cases(96))]

    #[test]
    fn feasible_result_satisfies_constraint((l0, sellers, eps, noise) in problem_strategy()) {
        let p = build(l0, &sellers, eps, noise);
        let sol = greedy_select(&p).unwrap();
        let check = feasibility_22(&p, &sol.fractions).unwrap();
        prop_assert_eq!(check.feasible, sol.feasible);
        if sol.feasible {
            prop_assert!(check.slack >= -1e-9 * check.rhs);
            prop_assert!(sol.achieved_coverage >= 1.0 - eps - 1e-9);
        }
        prop_assert!(sol.fractions.values().all(|&x| (0.0..=1.0).contains(&x)));
        let cost: f64 = p.sellers().iter().map(|s| s.price * sol.fractions.get(&s.id).copied().unwrap_or(0.0)).sum();
        prop_assert!((cost - sol.total_cost).abs() <= 1e-12 * cost.max(1.0));
    }

    #[test]
    fn constraint_equals_coverage_target((l0, sellers, eps, noise) in problem_strategy(), xs in prop::collection::vec(0.0..=1.0f64, 6)) {
        let p = build(l0, &sellers, eps, noise);
        let fr: BTreeMap<usize, f64> = p.sellers().iter().zip(&xs).map(|(s, &x)| (s.id, x)).collect();
        let f = feasibility_22(&p, &fr).unwrap();
        let pc = coverage::coverage_approx(&p.scenario(&fr).unwrap(), p.radio()).unwrap();
        if (pc - (1.0 - eps)).abs() > 1e-9 {
            prop_assert_eq!(f.slack >= 0.0, pc >= 1.0 - eps);
        }
    }

    #[test]
    fn input_order_is_irrelevant((l0, sellers, eps, noise) in problem_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let p = build(l0, &sellers, eps, noise);
        let mut shuffled = p.sellers().to_vec();
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let q = PurchaseProblem::new(p.buyer_intensity(), shuffled, *p.radio(), *p.qos()).unwrap();
        let a = greedy_select(&p).unwrap();
        let b = greedy_select(&q).unwrap();
        prop_assert_eq!(a.selected, b.selected);
        prop_assert_eq!(a.fractions, b.fractions);
    }
}
