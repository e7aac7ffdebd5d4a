//! Bounded scalar minimization: a uniform grid scan to locate the basin,
//! then golden-section refinement inside the neighbouring grid cells.

use rayon::prelude::*;

/// Location and value of a minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Golden-section search on `[lo, hi]` until the bracket is narrower than `tol`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Minimum {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = finite_or_inf(f(c));
    let mut fd = finite_or_inf(f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = finite_or_inf(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = finite_or_inf(f(d));
        }
    }
    if fc <= fd {
        Minimum { x: c, value: fc }
    } else {
        Minimum { x: d, value: fd }
    }
}

/// Evaluates `f` on `points` equally spaced nodes of `[lo, hi]` (endpoints
/// included) in parallel, then refines around the best node. Ties resolve to
/// the smallest `x`, and an endpoint is returned as is when it wins.
pub fn grid_then_golden<F>(f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Minimum
where
    F: Fn(f64) -> f64 + Sync,
{
    assert!(points >= 2 && hi > lo, "grid needs two nodes and a nonempty interval");
    let step = (hi - lo) / (points - 1) as f64;
    let node = |i: usize| if i == points - 1 { hi } else { lo + step * i as f64 };
    let values: Vec<f64> = (0..points).into_par_iter().map(|i| finite_or_inf(f(node(i)))).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v < values[best] { i } else { best });
    let grid_min = Minimum { x: node(best), value: values[best] };
    let left = node(best.saturating_sub(1));
    let right = node((best + 1).min(points - 1));
    let refined = golden_section(&f, left, right, tol);
    if refined.value < grid_min.value {
        refined
    } else {
        grid_min
    }
}

/// Brute-force minimizer over `points` equally spaced nodes; ties resolve to
/// the smallest `x`.
pub fn grid_scan<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> Minimum {
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = Minimum { x: lo, value: finite_or_inf(f(lo)) };
    for i in 1..points {
        let x = lo + step * i as f64;
        let v = finite_or_inf(f(x));
        if v < best.value {
            best = Minimum { x, value: v };
        }
    }
    best
}
