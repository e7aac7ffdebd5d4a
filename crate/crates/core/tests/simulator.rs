mod common;

use common::{ctmc_oracle, exp, mm1};
use damctl_core::analytics::{busy_period_metrics, stationary_probs};
use damctl_core::simulator::{replicate, simulate, simulate_cycle, sweep_simulate, SimulationConfig};
use damctl_core::{DamModel, ServiceDistribution};
use proptest::prelude::*;

fn within(estimate: f64, half_width: f64, exact: f64) -> bool {
    (estimate - exact).abs() <= 3.0 * half_width
}

#[test]
fn reproducible_for_a_seed() {
    let c = SimulationConfig::new(mm1(0.8, 0.5, 5), 20_000, 11);
    let a = simulate(&c).unwrap();
    let b = simulate(&c).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let other = simulate(&SimulationConfig { seed: 12, ..c }).unwrap();
    assert_ne!(a.p1_hat, other.p1_hat);
}

#[test]
fn agrees_with_exact_mm1() {
    let model = mm1(0.8, 0.5, 5);
    let r = simulate(&SimulationConfig::new(model.clone(), 200_000, 3)).unwrap();
    let (p1, p2) = stationary_probs(&model).unwrap();
    let m = busy_period_metrics(&model).unwrap();
    let hw = r.half_widths;
    assert!(within(r.p1_hat, hw.p1, p1), "p1 {} ± {} vs {p1}", r.p1_hat, hw.p1);
    assert!(within(r.p2_hat, hw.p2, p2), "p2 {} ± {} vs {p2}", r.p2_hat, hw.p2);
    assert!(within(r.e_nu1_hat, hw.e_nu1, m.e_nu1));
    assert!(within(r.e_nu2_hat, hw.e_nu2, m.e_nu2));
    let (_, _, above) = ctmc_oracle(1.0, 1.25, 2.0, 5, 150);
    assert!(within(r.p_above_hat, hw.p_above, above), "{} vs {above}", r.p_above_hat);
}

#[test]
fn agrees_with_exact_for_other_families() {
    for b1 in [
        ServiceDistribution::deterministic(0.9).unwrap(),
        ServiceDistribution::erlang(2, 2.0 / 1.1).unwrap(),
        ServiceDistribution::hyper_exponential(vec![0.3, 0.7], vec![0.5, 2.0]).unwrap(),
    ] {
        let model = DamModel::new(1.0, b1, ServiceDistribution::gamma(2.0, 4.0).unwrap(), 4).unwrap();
        let r = simulate(&SimulationConfig::new(model.clone(), 100_000, 5)).unwrap();
        let (p1, p2) = stationary_probs(&model).unwrap();
        assert!(within(r.p1_hat, r.half_widths.p1, p1), "{}: {} vs {p1}", model.b1, r.p1_hat);
        assert!(within(r.p2_hat, r.half_widths.p2, p2), "{}: {} vs {p2}", model.b1, r.p2_hat);
    }
}

#[test]
fn wald_and_count_identities_hold_empirically() {
    let model = mm1(1.1, 0.6, 3);
    let r = simulate(&SimulationConfig::new(model.clone(), 100_000, 9)).unwrap();
    let hw = r.half_widths;
    assert!(within(r.e_t1_hat, hw.e_t1, model.b1.mean() * r.e_nu1_hat));
    assert!(within(r.e_t2_hat, hw.e_t2, model.b2.mean() * r.e_nu2_hat));
    let (rho1, rho2) = (model.rho1(), model.rho2());
    let implied = 1.0 / (1.0 - rho2) - (1.0 - rho1) / (1.0 - rho2) * r.e_nu1_hat;
    let slack = hw.e_nu2 + (1.0 - rho1).abs() / (1.0 - rho2) * hw.e_nu1;
    assert!((r.e_nu2_hat - implied).abs() <= 3.0 * slack);
}

#[test]
fn confidence_intervals_cover() {
    let model = mm1(0.8, 0.5, 5);
    let (p1, _) = stationary_probs(&model).unwrap();
    let reports = replicate(&SimulationConfig::new(model, 20_000, 2024), 100).unwrap();
    let hits = reports.iter().filter(|r| (r.p1_hat - p1).abs() <= r.half_widths.p1).count();
    assert!(hits >= 90, "coverage {hits}/100");
}

#[test]
fn sweep_is_elementwise() {
    let a = SimulationConfig::new(mm1(0.8, 0.5, 5), 5_000, 1);
    let b = SimulationConfig::new(mm1(0.9, 0.4, 3), 5_000, 2);
    let single = simulate(&a).unwrap();
    assert_eq!(sweep_simulate(std::slice::from_ref(&a)).unwrap(), vec![single.clone()]);
    let forward = sweep_simulate(&[a.clone(), b.clone()]).unwrap();
    let backward = sweep_simulate(&[b, a]).unwrap();
    assert_eq!(forward[0], backward[1]);
    assert_eq!(forward[1], backward[0]);
    assert!(sweep_simulate(&[]).is_err());
}

#[test]
fn estimates_are_well_formed() {
    let r = simulate(&SimulationConfig::new(mm1(0.8, 0.5, 5), 10_000, 4)).unwrap();
    let hw = r.half_widths;
    for v in [hw.p1, hw.p2, hw.p_above, hw.e_nu1, hw.e_nu2, hw.e_t1, hw.e_t2] {
        assert!(v.is_finite() && v > 0.0);
    }
    assert!(r.p1_hat + r.p2_hat <= 1.0 + hw.p1 + hw.p2);
    assert_eq!(r.cycles, 10_000);
}

#[test]
fn deterministic_ties_are_reproducible() {
    let model = DamModel::new(
        1.0,
        ServiceDistribution::deterministic(0.5).unwrap(),
        ServiceDistribution::deterministic(0.25).unwrap(),
        2,
    )
    .unwrap();
    let c = SimulationConfig::new(model, 1_000, 77);
    assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
}

proptest! {
    #![proptest_config(common::cases(64))]

    #[test]
    fn cycle_bookkeeping_adds_up(seed in any::<u64>(), index in 0u64..1_000_000, level in 1usize..8) {
        let model = DamModel::new(1.0, exp(1.0), exp(2.5), level).unwrap();
        let rec = simulate_cycle(&model, seed, index).unwrap();
        prop_assert_eq!(rec.services, rec.services_below + rec.services_above);
        prop_assert!(rec.services >= 1 && rec.services_below >= 1);
        prop_assert_eq!(rec.busy, rec.busy_below + rec.busy_above);
        prop_assert!(rec.time_above <= rec.busy * (1.0 + 1e-12));
        prop_assert_eq!(rec, simulate_cycle(&model, seed, index).unwrap());
    }
}
