//! Busy-period recurrence in arbitrary-precision binary floating point.
//!
//! Used as ground truth when `r_0` is small or the level is very large and
//! the double-precision recurrence may lose digits to cancellation.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

use crate::distributions::ServiceDistribution;
use crate::error::{DamError, Result};
use crate::numeric::ScaledFloat;

type Big = FBig<HalfEven, 2>;

fn bits_for_digits(digits: u32) -> usize {
    (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as usize + 8
}

fn big(x: f64, bits: usize) -> Big {
    Big::try_from(x)
        .expect("finite parameters")
        .with_precision(bits)
        .value()
}

fn to_scaled(x: &Big) -> ScaledFloat {
    let repr = x.repr();
    if repr.is_pos_zero() || repr.is_neg_zero() {
        return ScaledFloat::from_f64(0.0);
    }
    let top = repr.exponent() + repr.digits() as isize;
    let mantissa = (x.clone() >> top).to_f64().value();
    ScaledFloat::new(mantissa, top as i64)
}

enum BigKernel {
    NegativeBinomial { shape: Big, q: Big },
    Poisson { mean: Big },
}

struct BigBranch {
    weight: Big,
    kernel: BigKernel,
    current: Big,
}

impl BigBranch {
    fn advance(&mut self, j: usize, bits: usize) {
        let jb = big(j as f64, bits);
        let next_j = big((j + 1) as f64, bits);
        let ratio = match &self.kernel {
            BigKernel::NegativeBinomial { shape, q } => q * &(shape + &jb) / &next_j,
            BigKernel::Poisson { mean } => mean / &next_j,
        };
        self.current = &self.current * &ratio;
    }
}

fn branches(dist: &ServiceDistribution, lambda: f64, bits: usize) -> Vec<BigBranch> {
    let lam = big(lambda, bits);
    let negbin = |w: f64, shape: f64, rate: f64| {
        let rate = big(rate, bits);
        let total = &lam + &rate;
        let p = &rate / &total;
        let q = &lam / &total;
        let shape_big = big(shape, bits);
        let current = if shape == 1.0 { p } else { (&shape_big * &p.ln()).exp() };
        BigBranch {
            weight: big(w, bits),
            kernel: BigKernel::NegativeBinomial { shape: shape_big, q },
            current,
        }
    };
    match dist {
        ServiceDistribution::Exponential { rate } => vec![negbin(1.0, 1.0, *rate)],
        ServiceDistribution::Erlang { shape, rate } => vec![negbin(1.0, f64::from(*shape), *rate)],
        ServiceDistribution::Gamma { shape, rate } => vec![negbin(1.0, *shape, *rate)],
        ServiceDistribution::Deterministic { duration } => {
            let mean = &lam * &big(*duration, bits);
            let current = (-mean.clone()).exp();
            vec![BigBranch { weight: big(1.0, bits), kernel: BigKernel::Poisson { mean }, current }]
        }
        ServiceDistribution::HyperExponential { weights, rates } => weights
            .iter()
            .zip(rates)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, r)| negbin(*w, 1.0, *r))
            .collect(),
    }
}

/// `Q_0, …, Q_level` computed with `digits` significant decimal digits.
pub(crate) fn run_recurrence(
    b1: &ServiceDistribution,
    lambda: f64,
    level: usize,
    digits: u32,
) -> Result<Vec<ScaledFloat>> {
    if digits == 0 {
        return Err(DamError::invalid("extended precision needs at least one digit"));
    }
    let bits = bits_for_digits(digits);
    // Truncation point from the double-precision tail bound.
    let mut probe = b1.weight_sequence(lambda)?;
    let r0 = probe.next_weight();
    let tol = (r0 * 10f64.powi(-(digits as i32))).max(f64::MIN_POSITIVE);
    let mut window = 0;
    while window < level && probe.tail_bound() > tol {
        probe.next_weight();
        window += 1;
    }

    let mut parts = branches(b1, lambda, bits);
    let mut weights = Vec::with_capacity(window + 1);
    for j in 0..=window {
        let mut total = big(0.0, bits);
        for part in &mut parts {
            total = &total + &(&part.weight * &part.current);
            part.advance(j, bits);
        }
        weights.push(total);
    }

    let mut q: Vec<Big> = Vec::with_capacity(level + 1);
    q.push(big(1.0, bits));
    for n in 0..level {
        let mut acc = q[n].clone();
        for j in 1..=n.min(window) {
            acc = &acc - &(&weights[j] * &q[n + 1 - j]);
        }
        q.push(&acc / &weights[0]);
    }
    Ok(q.iter().map(to_scaled).collect())
}
