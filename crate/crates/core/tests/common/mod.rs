#![allow(dead_code)]

use damctl_core::{DamModel, ServiceDistribution};
use proptest::prelude::*;

pub fn exp(rate: f64) -> ServiceDistribution {
    ServiceDistribution::exponential(rate).unwrap()
}

/// M/M/1 threshold model with `λ = 1`.
pub fn mm1(rho1: f64, rho2: f64, level: usize) -> DamModel {
    DamModel::new(1.0, exp(1.0 / rho1), exp(1.0 / rho2), level).unwrap()
}

/// One member of each family, all with unit mean.
pub fn unit_mean_families() -> Vec<ServiceDistribution> {
    vec![
        exp(1.0),
        ServiceDistribution::erlang(3, 3.0).unwrap(),
        ServiceDistribution::gamma(0.7, 0.7).unwrap(),
        ServiceDistribution::deterministic(1.0).unwrap(),
        ServiceDistribution::hyper_exponential(vec![0.4, 0.6], vec![0.5, 3.0]).unwrap(),
    ]
}

/// Any family, with mean in a range where weight tails stay short.
pub fn arb_distribution() -> impl Strategy<Value = ServiceDistribution> {
    prop_oneof![
        (0.3f64..5.0).prop_map(|r| ServiceDistribution::exponential(r).unwrap()),
        (1u32..6, 0.5f64..8.0).prop_map(|(k, r)| ServiceDistribution::erlang(k, r).unwrap()),
        (0.3f64..4.0, 0.3f64..6.0).prop_map(|(k, r)| ServiceDistribution::gamma(k, r).unwrap()),
        (0.1f64..3.0).prop_map(|d| ServiceDistribution::deterministic(d).unwrap()),
        (0.05f64..0.95, 0.3f64..3.0, 1.0f64..8.0)
            .prop_map(|(w, r1, r2)| ServiceDistribution::hyper_exponential(vec![w, 1.0 - w], vec![r1, r2]).unwrap()),
    ]
}

/// Stationary law of the exponential threshold queue, solved as a
/// continuous-time Markov chain on `(n, k)` where `k` is the law of the
/// service in progress. Returns `(P{empty}, P{serving with b2},
/// P{more than L present})`.
pub fn ctmc_oracle(lambda: f64, mu1: f64, mu2: f64, level: usize, cap: usize) -> (f64, f64, f64) {
    // State 0 is empty; (n, k) maps to 1 + 2(n-1) + k for n = 1..=cap.
    let size = 1 + 2 * cap;
    let idx = |n: usize, k: usize| 1 + 2 * (n - 1) + k;
    let law = |n: usize| usize::from(n > level);
    let mut q = vec![vec![0.0f64; size]; size];
    let mut add = |from: usize, to: usize, rate: f64| {
        q[from][to] += rate;
        q[from][from] -= rate;
    };
    add(0, idx(1, law(1)), lambda);
    for n in 1..=cap {
        for k in 0..2 {
            let s = idx(n, k);
            if n < cap {
                add(s, idx(n + 1, k), lambda);
            }
            let mu = if k == 0 { mu1 } else { mu2 };
            let to = if n == 1 { 0 } else { idx(n - 1, law(n - 1)) };
            add(s, to, mu);
        }
    }
    // Solve π Q = 0 with Σπ = 1: transpose, replace the last equation.
    let mut a: Vec<Vec<f64>> = (0..size).map(|i| (0..size).map(|j| q[j][i]).collect()).collect();
    let mut b = vec![0.0; size];
    a[size - 1] = vec![1.0; size];
    b[size - 1] = 1.0;
    for col in 0..size {
        let pivot = (col..size).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (k, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
                b[col + 1 + k] -= f * b[col];
            }
        }
    }
    let mut pi = vec![0.0; size];
    for row in (0..size).rev() {
        let s: f64 = (row + 1..size).map(|c| a[row][c] * pi[c]).sum();
        pi[row] = (b[row] - s) / a[row][row];
    }
    let p_b2: f64 = (1..=cap).map(|n| pi[idx(n, 1)]).sum();
    let p_above: f64 = (level + 1..=cap).map(|n| pi[idx(n, 0)] + pi[idx(n, 1)]).sum();
    (pi[0], p_b2, p_above)
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, failure_persistence: None, ..ProptestConfig::default() }
}
