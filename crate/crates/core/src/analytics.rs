//! Exact finite-level analysis of the threshold-switching M/GI/1 queue.
//!
//! A customer entering service is served under `b1` when the number in
//! system (counting that customer) is at most `level`, and under `b2`
//! otherwise. Everything here flows from `Q_L`, the expected number of
//! `b1`-services in a busy period, obtained from the convolution recurrence
//!
//! ```text
//! Q_0 = 1,   Q_{n+1} = (Q_n - Σ_{j=1}^{n} r_j Q_{n-j+1}) / r_0
//! ```
//!
//! with `r_j` the mixed-Poisson weights of `b1`. Wald's identity and the
//! renewal-reward theorem then give the busy-period means and the long-run
//! probabilities of the empty state (`p1`) and of `b2` service (`p2`).

use serde::{Deserialize, Serialize};

use crate::distributions::ServiceDistribution;
use crate::error::{DamError, Result};
use crate::numeric::{CompensatedSum, ScaledFloat};
use crate::precision;
use crate::series;

/// Smallest admissible `r_0`.
pub const MIN_FIRST_WEIGHT: f64 = 1e-300;

/// Weights whose combined tail is below `r_0 · TAIL_REL_TOL` are dropped
/// from the recurrence; their contribution is below rounding.
const TAIL_REL_TOL: f64 = f64::EPSILON * 1e-4;

const RESCALE_THRESHOLD: f64 = 1e300;
const RESCALE_BITS: i32 = 900;

/// Arrival rate, the two service laws and the switching level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamModel {
    pub lambda: f64,
    pub b1: ServiceDistribution,
    pub b2: ServiceDistribution,
    pub level: usize,
}

impl DamModel {
    pub fn new(lambda: f64, b1: ServiceDistribution, b2: ServiceDistribution, level: usize) -> Result<Self> {
        let model = DamModel { lambda, b1, b2, level };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(DamError::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.level < 1 {
            return Err(DamError::invalid("level must be at least 1"));
        }
        self.b1.validate()?;
        self.b2.validate()?;
        let rho2 = self.rho2();
        if rho2 >= 1.0 {
            return Err(DamError::invalid(format!("rho2 = {rho2} must be below 1 for stationarity")));
        }
        Ok(())
    }

    pub fn with_level(&self, level: usize) -> Self {
        DamModel { level, ..self.clone() }
    }

    pub fn with_b1(&self, b1: ServiceDistribution) -> Self {
        DamModel { b1, ..self.clone() }
    }

    pub fn rho1(&self) -> f64 {
        self.lambda * self.b1.mean()
    }

    pub fn rho2(&self) -> f64 {
        self.lambda * self.b2.mean()
    }

    /// `λ² E[B1²]`.
    pub fn rho12(&self) -> f64 {
        self.lambda.powi(2) * self.b1.raw_moment(2).expect("order 2 is valid")
    }

    /// `λ³ E[B1³]`.
    pub fn rho13(&self) -> f64 {
        self.lambda.powi(3) * self.b1.raw_moment(3).expect("order 3 is valid")
    }

    /// `ρ_{1,2}` of the `b1` family rescaled to load exactly 1.
    pub fn rho12_tilde(&self) -> Result<f64> {
        critical_rho12(self.lambda, &self.b1)
    }
}

/// `ρ_{1,2}` of `shape` rescaled to mean `1/λ` (load 1).
pub fn critical_rho12(lambda: f64, shape: &ServiceDistribution) -> Result<f64> {
    let at_one = shape.scale_to_mean(1.0 / lambda)?;
    Ok(lambda.powi(2) * at_one.raw_moment(2)?)
}

/// Linear damage-cost rates for the lower and upper boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub j1: f64,
    pub j2: f64,
}

impl CostModel {
    pub fn new(j1: f64, j2: f64) -> Result<Self> {
        let costs = CostModel { j1, j2 };
        costs.validate()?;
        Ok(costs)
    }

    /// Costs must be finite and nonnegative; zero rates are accepted so that
    /// one-sided objectives can be expressed.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("j1", self.j1), ("j2", self.j2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(DamError::invalid(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Arithmetic used by the busy-period recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Precision {
    #[default]
    Double,
    /// Arbitrary precision with the given number of significant decimal digits.
    Extended { digits: u32 },
}

impl Precision {
    pub const MAX_DIGITS: u32 = 250;

    pub fn extended(digits: u32) -> Result<Self> {
        if !(16..=Self::MAX_DIGITS).contains(&digits) {
            return Err(DamError::invalid(format!(
                "extended precision needs 16..={} decimal digits, got {digits}",
                Self::MAX_DIGITS
            )));
        }
        Ok(Precision::Extended { digits })
    }
}

/// `Q_0, …, Q_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct BusyPeriodCounts {
    values: Vec<ScaledFloat>,
}

impl BusyPeriodCounts {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Q_n` as an `f64` (infinite if it exceeds the range).
    pub fn get(&self, n: usize) -> f64 {
        self.values[n].to_f64()
    }

    pub fn scaled(&self, n: usize) -> ScaledFloat {
        self.values[n]
    }

    /// `Q_L = Eν_L^(1)`.
    pub fn last(&self) -> ScaledFloat {
        *self.values.last().expect("Q_0 is always present")
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.to_f64()).collect()
    }
}

fn first_weight_checked(model: &DamModel) -> Result<f64> {
    let r0 = model.b1.weight_sequence(model.lambda)?.next_weight();
    if r0 < MIN_FIRST_WEIGHT {
        return Err(DamError::NumericDegeneracy(format!(
            "r_0 = {r0:e} underflows: b1 puts too little mass near zero for lambda = {}",
            model.lambda
        )));
    }
    Ok(r0)
}

pub fn busy_period_counts(model: &DamModel) -> Result<BusyPeriodCounts> {
    busy_period_counts_with(model, Precision::Double)
}

pub fn busy_period_counts_with(model: &DamModel, precision: Precision) -> Result<BusyPeriodCounts> {
    model.validate()?;
    let r0 = first_weight_checked(model)?;
    let values = match precision {
        Precision::Double => {
            let weights = model.b1.truncated_weights(model.lambda, model.level, r0 * TAIL_REL_TOL)?;
            run_recurrence(&weights, model.level)
        }
        Precision::Extended { digits } => {
            precision::run_recurrence(&model.b1, model.lambda, model.level, digits)?
        }
    };
    Ok(BusyPeriodCounts { values })
}

fn run_recurrence(weights: &[f64], level: usize) -> Vec<ScaledFloat> {
    let r0 = weights[0];
    let window = weights.len() - 1;
    let mut work = vec![0.0; level + 1];
    let mut out = Vec::with_capacity(level + 1);
    let mut exponent: i64 = 0;
    work[0] = 1.0;
    out.push(ScaledFloat::ONE);
    for n in 0..level {
        let mut acc = CompensatedSum::new();
        acc.add(work[n]);
        for j in 1..=n.min(window) {
            acc.add(-weights[j] * work[n + 1 - j]);
        }
        let next = acc.value() / r0;
        work[n + 1] = next;
        out.push(ScaledFloat::new(next, exponent));
        if next > RESCALE_THRESHOLD {
            let factor = 2f64.powi(-RESCALE_BITS);
            let lo = (n + 1).saturating_sub(window);
            work[lo..=n + 1].iter_mut().for_each(|w| *w *= factor);
            exponent += i64::from(RESCALE_BITS);
        }
    }
    out
}

/// Power-series coefficients of `r(z) / (r(z) - z)` with `r(z) = B̂1(λ - λz)`,
/// computed by series division; equals `Q_0, …, Q_n`.
pub fn gf_coefficients(model: &DamModel, n: usize) -> Result<Vec<f64>> {
    model.validate()?;
    first_weight_checked(model)?;
    let numerator = model.b1.mixed_poisson_weights(model.lambda, n)?;
    let mut denominator = numerator.clone();
    if let Some(d1) = denominator.get_mut(1) {
        *d1 -= 1.0;
    } else {
        denominator.push(-1.0);
    }
    series::divide(&numerator, &denominator, n)
}

/// Busy-period expectations for one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusyPeriodMetrics {
    pub e_nu1: f64,
    pub e_nu2: f64,
    pub e_t1: f64,
    pub e_t2: f64,
    pub e_t: f64,
    pub e_idle: f64,
}

/// Long-run probabilities and the cost they induce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryMetrics {
    pub p1: f64,
    pub p2: f64,
    pub cost: f64,
}

/// Busy-period metrics implied by a given `Q_L`. Values exceeding the `f64`
/// range saturate to infinity.
pub fn metrics_from_count(model: &DamModel, q_level: ScaledFloat) -> BusyPeriodMetrics {
    let (rho1, rho2) = (model.rho1(), model.rho2());
    let e_nu1 = q_level.to_f64();
    // For rho1 < 1 and large L the difference cancels down to rounding
    // noise; its true value is positive, so noise below zero is clamped.
    let e_nu2 = if rho1 == 1.0 {
        1.0 / (1.0 - rho2)
    } else {
        (1.0 / (1.0 - rho2) - (1.0 - rho1) / (1.0 - rho2) * e_nu1).max(0.0)
    };
    let e_t1 = model.b1.mean() * e_nu1;
    let e_t2 = model.b2.mean() * e_nu2;
    BusyPeriodMetrics { e_nu1, e_nu2, e_t1, e_t2, e_t: e_t1 + e_t2, e_idle: 1.0 / model.lambda }
}

/// `(p1, p2)` implied by a given `Q_L`, evaluated through `1/Q_L` so that
/// astronomically large counts stay finite.
pub fn probs_from_count(model: &DamModel, q_level: ScaledFloat) -> (f64, f64) {
    let (rho1, rho2) = (model.rho1(), model.rho2());
    let inv = q_level.recip_f64();
    let denom = inv + (rho1 - rho2);
    let p1 = (1.0 - rho2) * inv / denom;
    let p2 = (rho2 * (inv + (rho1 - 1.0)) / denom).max(0.0);
    (p1, p2)
}

pub fn busy_period_metrics(model: &DamModel) -> Result<BusyPeriodMetrics> {
    let counts = busy_period_counts(model)?;
    Ok(metrics_from_count(model, counts.last()))
}

pub fn stationary_probs(model: &DamModel) -> Result<(f64, f64)> {
    let counts = busy_period_counts(model)?;
    Ok(probs_from_count(model, counts.last()))
}

/// `J(L) = L (j1 p1 + j2 p2)`.
pub fn cost(model: &DamModel, costs: &CostModel) -> Result<f64> {
    Ok(stationary_metrics(model, costs)?.cost)
}

pub fn stationary_metrics(model: &DamModel, costs: &CostModel) -> Result<StationaryMetrics> {
    stationary_metrics_with(model, costs, Precision::Double)
}

pub fn stationary_metrics_with(model: &DamModel, costs: &CostModel, precision: Precision) -> Result<StationaryMetrics> {
    costs.validate()?;
    let counts = busy_period_counts_with(model, precision)?;
    Ok(stationary_from_count(model, costs, counts.last()))
}

fn stationary_from_count(model: &DamModel, costs: &CostModel, q_level: ScaledFloat) -> StationaryMetrics {
    let (p1, p2) = probs_from_count(model, q_level);
    let cost = model.level as f64 * (costs.j1 * p1 + costs.j2 * p2);
    StationaryMetrics { p1, p2, cost }
}

/// Everything the exact path yields for one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactAnalysis {
    pub q_level: ScaledFloat,
    pub metrics: BusyPeriodMetrics,
    pub stationary: StationaryMetrics,
}

pub fn analyze(model: &DamModel, costs: &CostModel, precision: Precision) -> Result<ExactAnalysis> {
    costs.validate()?;
    let q_level = busy_period_counts_with(model, precision)?.last();
    Ok(ExactAnalysis {
        q_level,
        metrics: metrics_from_count(model, q_level),
        stationary: stationary_from_count(model, costs, q_level),
    })
}
