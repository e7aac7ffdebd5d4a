mod common;

use common::{arb_distribution, ctmc_oracle, exp, mm1, rel, unit_mean_families};
use damctl_core::analytics::{
    analyze, busy_period_counts, busy_period_counts_with, busy_period_metrics, cost, gf_coefficients,
    stationary_probs,
};
use damctl_core::{CostModel, DamModel, Precision};
use proptest::prelude::*;

#[test]
fn mm1_closed_form() {
    for rho1 in [0.5, 0.8, 1.0, 1.25] {
        let q = busy_period_counts(&mm1(rho1, 0.5, 200)).unwrap();
        for n in 0..=200usize {
            let expect = if rho1 == 1.0 {
                n as f64 + 1.0
            } else {
                (1.0 - rho1.powi(n as i32 + 1)) / (1.0 - rho1)
            };
            assert!(rel(q.get(n), expect) < 1e-10, "rho1 {rho1}, n {n}");
        }
    }
}

#[test]
fn matches_markov_chain_oracle() {
    for (rho1, level) in [(0.8, 5), (0.6, 1), (1.0, 12), (1.3, 8), (0.9, 30)] {
        let model = mm1(rho1, 0.5, level);
        let (p1, p2) = stationary_probs(&model).unwrap();
        let (c1, c2, _) = ctmc_oracle(1.0, 1.0 / rho1, 2.0, level, level + 120);
        assert!(rel(p1, c1) < 1e-9, "p1 {p1} vs {c1} at rho1 {rho1} L {level}");
        assert!(rel(p2, c2) < 1e-9, "p2 {p2} vs {c2} at rho1 {rho1} L {level}");
    }
}

#[test]
fn worked_example() {
    let model = mm1(0.8, 0.5, 5);
    let q = busy_period_counts(&model).unwrap();
    assert!((q.get(5) - 3.68928).abs() < 1e-12);
    let m = busy_period_metrics(&model).unwrap();
    assert!((m.e_nu2 - 0.524288).abs() < 1e-12);
    let (p1, p2) = stationary_probs(&model).unwrap();
    assert!((p1 - 0.237329).abs() < 1e-6);
    assert!((p2 - 0.062215).abs() < 1e-6);
    let j = cost(&model, &CostModel::new(1.0, 1.0).unwrap()).unwrap();
    assert!((j - 1.497720).abs() < 1e-5);
    assert_eq!(cost(&model, &CostModel::new(0.0, 0.0).unwrap()).unwrap(), 0.0);
}

#[test]
fn critical_example() {
    let model = mm1(1.0, 0.5, 9);
    assert!((busy_period_counts(&model).unwrap().get(9) - 10.0).abs() < 1e-12);
    let m = busy_period_metrics(&model).unwrap();
    assert!((m.e_nu2 - 2.0).abs() < 1e-12);
    assert!((m.e_t2 - 1.0).abs() < 1e-12);
    let (p1, p2) = stationary_probs(&model).unwrap();
    assert!((p1 - 0.5 / 6.0).abs() < 1e-14 && (p2 - 0.5 / 6.0).abs() < 1e-14);
    let j = cost(&model, &CostModel::new(1.0, 1.0).unwrap()).unwrap();
    assert!((j - 1.5).abs() < 1e-13);
}

#[test]
fn first_step_is_reciprocal_of_r0() {
    let model = mm1(1.25, 0.5, 1);
    let q = gf_coefficients(&model, 1).unwrap();
    assert_eq!(q[0], 1.0);
    assert!((q[1] - 2.25).abs() < 1e-14);
    assert!((busy_period_counts(&model).unwrap().get(1) - 2.25).abs() < 1e-14);
}

#[test]
fn two_paths_agree_across_families() {
    for shape in unit_mean_families() {
        for rho1 in [0.8, 1.0, 1.25] {
            let b1 = shape.scale_to_mean(rho1).unwrap();
            let model = DamModel::new(1.0, b1, exp(2.0), 100).unwrap();
            let q = busy_period_counts(&model).unwrap();
            let g = gf_coefficients(&model, 100).unwrap();
            for (n, gn) in g.iter().enumerate().take(101) {
                assert!(rel(*gn, q.get(n)) < 1e-9, "{} rho1 {rho1} n {n}", shape.family());
            }
        }
    }
}

#[test]
fn extended_precision_agrees() {
    for shape in unit_mean_families() {
        let model = DamModel::new(1.0, shape.scale_to_mean(1.1).unwrap(), exp(2.0), 300).unwrap();
        let d = busy_period_counts(&model).unwrap();
        let x = busy_period_counts_with(&model, Precision::extended(60).unwrap()).unwrap();
        assert!(rel(d.last().ratio(x.last()), 1.0) < 1e-11, "{}", shape.family());
    }
}

#[test]
fn supercritical_large_level_stays_finite() {
    let model = DamModel::new(1.0, exp(0.5), exp(2.0), 3000).unwrap();
    let q = busy_period_counts(&model).unwrap();
    assert!(q.last().ln() > 2000.0);
    let (p1, p2) = stationary_probs(&model).unwrap();
    assert!((0.0..1e-300).contains(&p1));
    assert!(rel(p2, 0.5 * 1.0 / 1.5) < 1e-12);
}

#[test]
fn degenerate_first_weight_is_reported() {
    let d = damctl_core::ServiceDistribution::deterministic(800.0).unwrap();
    let model = DamModel::new(1.0, d, exp(2.0), 10).unwrap();
    let err = busy_period_counts(&model).unwrap_err();
    assert!(!err.is_config_error());
}

#[test]
fn rejects_invalid_models() {
    assert!(DamModel::new(1.0, exp(1.0), exp(1.0), 5).is_err());
    assert!(DamModel::new(0.0, exp(1.0), exp(2.0), 5).is_err());
    assert!(DamModel::new(1.0, exp(1.0), exp(2.0), 0).is_err());
}

fn arb_model() -> impl Strategy<Value = DamModel> {
    (arb_distribution(), 0.3f64..1.7, 0.05f64..0.9, 1usize..150).prop_map(|(shape, rho1, rho2, level)| {
        DamModel::new(1.0, shape.scale_to_mean(rho1).unwrap(), exp(1.0 / rho2), level).unwrap()
    })
}

proptest! {
    #![proptest_config(common::cases(64))]

    #[test]
    fn counts_nondecreasing(model in arb_model()) {
        let q = busy_period_counts(&model).unwrap().to_vec();
        prop_assert_eq!(q[0], 1.0);
        for w in q.windows(2) {
            prop_assert!(w[1] >= w[0] * (1.0 - 1e-12));
        }
    }

    #[test]
    fn identity_chain(model in arb_model()) {
        let m = busy_period_metrics(&model).unwrap();
        prop_assert!(rel(model.lambda * m.e_t + 1.0, m.e_nu1 + m.e_nu2) < 1e-9);
        prop_assert!(m.e_nu1 >= 1.0 && m.e_nu2 >= 0.0);
        prop_assert!(rel(m.e_t, m.e_t1 + m.e_t2) < 1e-15);
    }

    #[test]
    fn renewal_reward_consistency(model in arb_model()) {
        let a = analyze(&model, &CostModel::new(1.0, 1.0).unwrap(), Precision::Double).unwrap();
        let m = a.metrics;
        let cycle = m.e_t + m.e_idle;
        prop_assert!((a.stationary.p1 - m.e_idle / cycle).abs() < 1e-12);
        prop_assert!((a.stationary.p2 - m.e_t2 / cycle).abs() < 1e-12);
        prop_assert!(a.stationary.p1 + a.stationary.p2 <= 1.0 + 1e-12);
    }
}
