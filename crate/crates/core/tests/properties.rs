//! Randomized and property-based invariants of the analytic model.

use d2dcache::analytic::{
    best_policy, cost_2rep, cost_mbr, cost_simple, prob_fewer_than, redundancy_threshold,
    steady_state_pmf, PolicySpec, SystemParams,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn draw_params(rng: &mut ChaCha8Rng) -> SystemParams {
    SystemParams {
        cost_ratio: 1.0 + rng.gen::<f64>() * 99.0,
        expected_nodes: 1.0 + rng.gen::<f64>() * 999.0,
        request_rate: rng.gen::<f64>().max(1e-6) * 10.0,
        lifetime: rng.gen::<f64>().max(1e-6) * 1e3,
    }
}

/// Second algebraic form of the simple-caching cost, kept independent of the
/// implementation's form: (NωT + R) / (T + 1/(Nω)).
fn cost_simple_alt(p: &SystemParams) -> f64 {
    let agg = p.expected_nodes * p.request_rate;
    (agg * p.lifetime + p.cost_ratio) / (p.lifetime + 1.0 / agg)
}

#[test]
fn poisson_normalization() {
    for n in [1.0f64, 5.0, 20.0, 100.0, 500.0, 1000.0] {
        let m = (n + 20.0 * n.sqrt()).ceil() as u64 + 50;
        let sum: f64 = (0..=m).map(|i| steady_state_pmf(n, i).unwrap()).sum();
        assert!(sum >= 1.0 - 1e-12, "N = {n}: sum = {sum}");
        assert!(sum <= 1.0 + 1e-12);
    }
}

#[test]
fn drop_below_two_closed_form_over_n_range() {
    for i in 1..=200 {
        let n = i as f64;
        let got = prob_fewer_than(n, 2).unwrap();
        let want = (n + 1.0) * (-n).exp();
        assert!((got - want).abs() <= 1e-12 * want, "N = {n}");
    }
}

#[test]
fn randomized_draws_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD2D);
    for _ in 0..10_000 {
        let p = draw_params(&mut rng);

        // both algebraic forms of the simple-caching cost agree
        let a = cost_simple(&p);
        let b = cost_simple_alt(&p);
        assert!((a - b).abs() <= 1e-12 * a.max(b), "params = {p:?}");

        // decision rule: cost_simple > cost_2rep iff R > R*
        let r_star = redundancy_threshold(&p);
        if (p.cost_ratio - r_star).abs() >= 1e-9 {
            let sign_costs = cost_simple(&p) > cost_2rep(&p);
            let sign_rule = p.cost_ratio > r_star;
            assert_eq!(sign_costs, sign_rule, "params = {p:?}, R* = {r_star}");
        }

        // MBR at k = 1 is 2-replication, and larger k only costs more
        assert_eq!(cost_mbr(&p, 1), cost_2rep(&p));
        let mut prev = cost_mbr(&p, 1);
        for k in 2..=16 {
            let c = cost_mbr(&p, k);
            assert!(c > prev, "cost_mbr not increasing at k = {k}, params = {p:?}");
            prev = c;
        }

        // the best redundant scheme is never a true regenerating code
        let (policy, _) = best_policy(&p, 8);
        assert!(
            !matches!(policy, PolicySpec::MbrRegenerating { k } if k >= 2),
            "params = {p:?} chose {policy}"
        );
    }
}

proptest! {
    #[test]
    fn threshold_consistent_with_costs(
        r in 1.000001f64..100.0,
        n in 1.0f64..1e3,
        omega in 1e-6f64..10.0,
        t in 1e-6f64..1e3,
    ) {
        let p = SystemParams::new(r, n, omega, t).unwrap();
        let r_star = redundancy_threshold(&p);
        prop_assume!((r - r_star).abs() >= 1e-9);
        prop_assert_eq!(cost_simple(&p) > cost_2rep(&p), r > r_star);
    }

    #[test]
    fn best_policy_cost_is_the_minimum(
        r in 1.000001f64..100.0,
        n in 1.0f64..1e3,
        omega in 1e-3f64..10.0,
        t in 1e-3f64..1e3,
    ) {
        let p = SystemParams::new(r, n, omega, t).unwrap();
        let (_, cost) = best_policy(&p, 8);
        prop_assert!(cost <= cost_simple(&p));
        prop_assert!(cost <= cost_2rep(&p));
        for k in 1..=8 {
            prop_assert!(cost <= cost_mbr(&p, k));
        }
    }
}
