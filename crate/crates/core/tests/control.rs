mod common;

use common::exp;
use damctl_core::asymptotics::{j_lower, j_upper};
use damctl_core::control::{
    asymptotic_counterpart, classify_regime, cost_sweep, optimize_asymptotic, optimize_exact, AsymptoticProblem,
    ExactProblem,
};
use damctl_core::minimize::grid_scan;
use damctl_core::{CostModel, CostRegime, SolveMode};
use proptest::prelude::*;

fn costs(j1: f64, j2: f64) -> CostModel {
    CostModel::new(j1, j2).unwrap()
}

/// A million-point scan, then a second one across the two cells around the
/// winner, for a resolution near 1e-10 on `[0, 20]`.
fn fine_scan(f: impl Fn(f64) -> f64 + Copy, lo: f64, hi: f64) -> f64 {
    let n = 1_000_001;
    let step = (hi - lo) / (n - 1) as f64;
    let coarse = grid_scan(f, lo, hi, n);
    grid_scan(f, (coarse.x - step).max(lo), (coarse.x + step).min(hi), n).x
}

#[test]
fn regime_examples() {
    assert_eq!(classify_regime(&costs(1.0, 1.0), 0.5).unwrap(), CostRegime::Critical);
    assert_eq!(classify_regime(&costs(2.0, 1.0), 0.5).unwrap(), CostRegime::UpperPenalized);
    assert_eq!(classify_regime(&costs(0.5, 1.0), 0.5).unwrap(), CostRegime::LowerPenalized);
    assert!(classify_regime(&costs(1.0, 1.0), 1.2).is_err());
}

#[test]
fn upper_example_matches_dense_grid() {
    let p = AsymptoticProblem::new(1.0, 0.5, 2.0, 1000, costs(2.0, 1.0));
    let s = optimize_asymptotic(&p).unwrap();
    let brute = fine_scan(|c| j_upper(c, 2.0, 0.5, &p.costs).unwrap(), 0.0, 20.0);
    assert!((s.c_star - brute).abs() < 1e-6, "{} vs {brute}", s.c_star);
    assert_eq!(s.mode, SolveMode::Asymptotic);
    assert_eq!(s.rho1_star, 1.0 + s.c_star / 1000.0);
}

#[test]
fn lower_example_matches_dense_grid() {
    let p = AsymptoticProblem::new(1.0, 0.5, 2.0, 1000, costs(0.5, 1.0));
    let s = optimize_asymptotic(&p).unwrap();
    assert_eq!(s.regime, CostRegime::LowerPenalized);
    let f = |c: f64| j_lower(c, 2.0, 0.5, &p.costs).unwrap();
    assert!((s.c_star - fine_scan(f, 0.0, 20.0)).abs() < 1e-6);
    let brute_interior = fine_scan(f, 20.0 / 256.0, 20.0);
    let interior = s.interior_c.unwrap();
    assert!((interior - brute_interior).abs() < 1e-6, "{interior} vs {brute_interior}");
    assert_eq!(s.rho1_star, 1.0 - s.c_star / 1000.0);
}

#[test]
fn balanced_costs_give_critical_load() {
    let p = AsymptoticProblem::new(0.7, 0.5, 2.0, 1000, costs(1.0, 1.0));
    let s = optimize_asymptotic(&p).unwrap();
    assert_eq!(s.c_star, 0.0);
    assert_eq!(s.rho1_star, 1.0);
    assert_eq!(s.predicted_cost, 1.0 * 2.0);
    assert_eq!(s.b1_star, 1.0 / 0.7);
}

#[test]
fn exact_balanced_mm1_oracle() {
    let problem = ExactProblem::new(1.0, exp(1.0), exp(2.0), 100, costs(1.0, 1.0));
    let s = optimize_exact(&problem).unwrap();
    let brute = grid_scan(|r| problem.cost_at(r).unwrap(), 0.5, 1.5, 1001);
    assert!((s.rho1_star - 1.0).abs() <= 10.0 / 100.0);
    assert!((s.rho1_star - brute.x).abs() <= 1e-3 + 1e-9);
    assert!(s.predicted_cost <= brute.value + 1e-12);
    assert_eq!(s.mode, SolveMode::Exact);
    assert!((s.c_star - 100.0 * (s.rho1_star - 1.0).abs()).abs() < 1e-12);
}

#[test]
fn modes_agree_at_large_level() {
    let problem = ExactProblem::new(1.0, exp(1.0), exp(2.0), 2000, costs(1.0, 1.0));
    let exact = optimize_exact(&problem).unwrap();
    let asym = optimize_asymptotic(&asymptotic_counterpart(&problem).unwrap()).unwrap();
    assert!((exact.rho1_star - 1.0).abs() <= 20.0 / 2000.0);
    assert!(((exact.predicted_cost - asym.predicted_cost) / asym.predicted_cost).abs() <= 0.10);
}

#[test]
fn exact_one_sided_costs() {
    let mut problem = ExactProblem::new(1.0, exp(1.0), exp(2.0), 10, costs(1.0, 0.0));
    assert_eq!(optimize_exact(&problem).unwrap().rho1_star, 1.5);
    problem.costs = costs(0.0, 1.0);
    assert_eq!(optimize_exact(&problem).unwrap().rho1_star, 0.5);
}

#[test]
fn sweep_rows_at_zero() {
    let rows = cost_sweep(&[0.0, 0.5, 1.0, 4.0], 2.0, 0.5, &costs(1.0, 1.0)).unwrap();
    assert_eq!(rows[0].j_upper, 2.0);
    assert!(rows.windows(2).all(|w| w[1].j_upper >= w[0].j_upper));
}

proptest! {
    #![proptest_config(common::cases(32))]

    #[test]
    fn regime_is_scale_invariant(j1 in 0.01f64..10.0, j2 in 0.01f64..10.0, rho2 in 0.01f64..0.99) {
        let base = classify_regime(&costs(j1, j2), rho2).unwrap();
        for alpha in [1e-3, 1.0, 1e3] {
            prop_assert_eq!(classify_regime(&costs(alpha * j1, alpha * j2), rho2).unwrap(), base);
        }
    }

    #[test]
    fn asymptotic_solution_invariants(
        j1 in 0.01f64..10.0, j2 in 0.01f64..10.0, rho2 in 0.05f64..0.95,
        rho12 in 0.2f64..5.0, level in 10usize..5000, lambda in 0.1f64..5.0,
    ) {
        let s = optimize_asymptotic(&AsymptoticProblem::new(lambda, rho2, rho12, level, costs(j1, j2))).unwrap();
        prop_assert!(s.c_star >= 0.0 && s.c_star <= 10.0 * rho12);
        let sign = match s.regime {
            CostRegime::Critical => 0.0,
            CostRegime::UpperPenalized => 1.0,
            CostRegime::LowerPenalized => -1.0,
        };
        prop_assert_eq!(s.rho1_star, 1.0 + sign * s.c_star / level as f64);
        prop_assert_eq!(s.b1_star, s.rho1_star / lambda);
        if s.regime == CostRegime::Critical {
            prop_assert_eq!(s.c_star, 0.0);
        }
    }
}
