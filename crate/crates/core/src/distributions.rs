//! Service-time laws with closed-form moments, Laplace–Stieltjes transforms
//! and mixed-Poisson weights.
//!
//! The mixed-Poisson weight `r_j` is the probability that exactly `j` Poisson(λ)
//! arrivals occur during one service:
//!
//! ```text
//! r_j = ∫ e^{-λx} (λx)^j / j! dB(x),      Σ_j r_j z^j = B̂(λ - λz)
//! ```
//!
//! | Family | r_j |
//! |---|---|
//! | Exponential, Erlang, Gamma | negative binomial, success probability `rate/(λ+rate)` |
//! | Deterministic | Poisson(λd) mass |
//! | HyperExponential | mixture of geometric sequences |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DamError, Result};

/// Below this value a weight is carried as a logarithm.
const LOG_DOMAIN_CUTOFF: f64 = 1e-300;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A service-time distribution from one of the supported closed-form families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServiceDistribution {
    #[serde(alias = "exp")]
    Exponential { rate: f64 },
    Erlang { shape: u32, rate: f64 },
    Gamma { shape: f64, rate: f64 },
    #[serde(alias = "det")]
    Deterministic { duration: f64 },
    #[serde(alias = "hyper")]
    HyperExponential { weights: Vec<f64>, rates: Vec<f64> },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DamError::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ServiceDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        Self::Erlang { shape, rate }.validated()
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::Gamma { shape, rate }.validated()
    }

    pub fn deterministic(duration: f64) -> Result<Self> {
        Self::Deterministic { duration }.validated()
    }

    pub fn hyper_exponential(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        Self::HyperExponential { weights, rates }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks the parameter invariants. Values built through serde are not
    /// validated until this is called.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Exponential { rate } => positive("rate", *rate),
            Self::Erlang { shape, rate } => {
                if *shape == 0 {
                    return Err(DamError::invalid("erlang shape must be at least 1"));
                }
                positive("rate", *rate)
            }
            Self::Gamma { shape, rate } => {
                positive("shape", *shape)?;
                positive("rate", *rate)
            }
            Self::Deterministic { duration } => positive("duration", *duration),
            Self::HyperExponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(DamError::invalid(format!(
                        "hyperexponential needs matching nonempty weights and rates, got {} and {}",
                        weights.len(),
                        rates.len()
                    )));
                }
                for &w in weights {
                    if !(w.is_finite() && w >= 0.0) {
                        return Err(DamError::invalid(format!(
                            "hyperexponential weight must be nonnegative, got {w}"
                        )));
                    }
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(DamError::invalid(format!(
                        "hyperexponential weights must sum to 1, got {total}"
                    )));
                }
                rates.iter().try_for_each(|&r| positive("rate", r))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Erlang { shape, rate } => f64::from(*shape) / rate,
            Self::Gamma { shape, rate } => shape / rate,
            Self::Deterministic { duration } => *duration,
            Self::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w / r).sum()
            }
        }
    }

    /// Exact `k`-th raw moment for `k` in `1..=3`.
    pub fn raw_moment(&self, k: u32) -> Result<f64> {
        if !(1..=3).contains(&k) {
            return Err(DamError::invalid(format!("moment order must be 1, 2 or 3, got {k}")));
        }
        let rising = |shape: f64, rate: f64| -> f64 {
            (0..k).map(|i| (shape + f64::from(i)) / rate).product()
        };
        Ok(match self {
            Self::Exponential { rate } => rising(1.0, *rate),
            Self::Erlang { shape, rate } => rising(f64::from(*shape), *rate),
            Self::Gamma { shape, rate } => rising(*shape, *rate),
            Self::Deterministic { duration } => duration.powi(k as i32),
            Self::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * rising(1.0, *r))
                .sum(),
        })
    }

    /// Laplace–Stieltjes transform `B̂(s) = E[e^{-sX}]`.
    pub fn lst(&self, s: f64) -> Result<f64> {
        check_transform_arg(s)?;
        let gamma_lst = |shape: f64, rate: f64| (-shape * (s / rate).ln_1p()).exp();
        Ok(match self {
            Self::Exponential { rate } => rate / (rate + s),
            Self::Erlang { shape, rate } => gamma_lst(f64::from(*shape), *rate),
            Self::Gamma { shape, rate } => gamma_lst(*shape, *rate),
            Self::Deterministic { duration } => (-s * duration).exp(),
            Self::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w * r / (r + s)).sum()
            }
        })
    }

    /// First derivative `B̂'(s)`; always in `[-mean, 0)`.
    pub fn lst_derivative(&self, s: f64) -> Result<f64> {
        check_transform_arg(s)?;
        let gamma_deriv = |shape: f64, rate: f64| {
            -shape / (rate + s) * (-shape * (s / rate).ln_1p()).exp()
        };
        Ok(match self {
            Self::Exponential { rate } => -rate / ((rate + s) * (rate + s)),
            Self::Erlang { shape, rate } => gamma_deriv(f64::from(*shape), *rate),
            Self::Gamma { shape, rate } => gamma_deriv(*shape, *rate),
            Self::Deterministic { duration } => -duration * (-s * duration).exp(),
            Self::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| -w * r / ((r + s) * (r + s)))
                .sum(),
        })
    }

    /// Weights `r_0, …, r_n` of the number of Poisson(λ) arrivals during one service.
    pub fn mixed_poisson_weights(&self, lambda: f64, n: usize) -> Result<Vec<f64>> {
        let mut seq = self.weight_sequence(lambda)?;
        Ok((0..=n).map(|_| seq.next_weight()).collect())
    }

    /// Weights `r_0, …, r_N` where `N ≤ max_n` is the first index whose
    /// remaining tail `Σ_{j>N} r_j` is provably below `tail_tol`.
    pub fn truncated_weights(&self, lambda: f64, max_n: usize, tail_tol: f64) -> Result<Vec<f64>> {
        let mut seq = self.weight_sequence(lambda)?;
        let mut out = Vec::new();
        loop {
            out.push(seq.next_weight());
            if out.len() > max_n || seq.tail_bound() <= tail_tol {
                return Ok(out);
            }
        }
    }

    /// Streaming generator for the mixed-Poisson weights.
    pub fn weight_sequence(&self, lambda: f64) -> Result<WeightSequence> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(DamError::invalid(format!("arrival rate must be positive, got {lambda}")));
        }
        let negbin = |shape: f64, rate: f64| Kernel::NegativeBinomial {
            shape,
            log_p: (rate / (lambda + rate)).ln(),
            q: lambda / (lambda + rate),
        };
        let branches = match self {
            Self::Exponential { rate } => vec![(1.0, negbin(1.0, *rate))],
            Self::Erlang { shape, rate } => vec![(1.0, negbin(f64::from(*shape), *rate))],
            Self::Gamma { shape, rate } => vec![(1.0, negbin(*shape, *rate))],
            Self::Deterministic { duration } => vec![(1.0, Kernel::Poisson { mean: lambda * duration })],
            Self::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, r)| (*w, negbin(1.0, *r)))
                .collect(),
        };
        Ok(WeightSequence {
            branches: branches.into_iter().map(|(w, k)| (w, Branch::new(k))).collect(),
        })
    }

    /// Same family rescaled to mean `b`.
    pub fn scale_to_mean(&self, b: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(DamError::invalid(format!("target mean must be positive, got {b}")));
        }
        let factor = self.mean() / b;
        Ok(match self {
            Self::Exponential { rate } => Self::Exponential { rate: rate * factor },
            Self::Erlang { shape, rate } => Self::Erlang { shape: *shape, rate: rate * factor },
            Self::Gamma { shape, rate } => Self::Gamma { shape: *shape, rate: rate * factor },
            Self::Deterministic { .. } => Self::Deterministic { duration: b },
            Self::HyperExponential { weights, rates } => Self::HyperExponential {
                weights: weights.clone(),
                rates: rates.iter().map(|r| r * factor).collect(),
            },
        })
    }

    /// Short family name used in reports.
    pub fn family(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Erlang { .. } => "erlang",
            Self::Gamma { .. } => "gamma",
            Self::Deterministic { .. } => "deterministic",
            Self::HyperExponential { .. } => "hyperexponential",
        }
    }
}

fn check_transform_arg(s: f64) -> Result<()> {
    if s.is_nan() || s < 0.0 {
        Err(DamError::invalid(format!("transform argument must be nonnegative, got {s}")))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    NegativeBinomial { shape: f64, log_p: f64, q: f64 },
    Poisson { mean: f64 },
}

impl Kernel {
    fn log_first(&self) -> f64 {
        match *self {
            Kernel::NegativeBinomial { shape, log_p, .. } => shape * log_p,
            Kernel::Poisson { mean } => -mean,
        }
    }

    /// `r_{j+1} / r_j`.
    fn ratio(&self, j: usize) -> f64 {
        let j = j as f64;
        match *self {
            Kernel::NegativeBinomial { shape, q, .. } => q * (shape + j) / (j + 1.0),
            Kernel::Poisson { mean } => mean / (j + 1.0),
        }
    }

    /// Upper bound on `ratio(i)` over all `i ≥ j`.
    fn ratio_sup_from(&self, j: usize) -> f64 {
        match *self {
            Kernel::NegativeBinomial { shape, q, .. } if shape < 1.0 => q,
            _ => self.ratio(j),
        }
    }
}

#[derive(Debug, Clone)]
struct Branch {
    kernel: Kernel,
    next_index: usize,
    value: f64,
    log_value: f64,
    in_log: bool,
}

impl Branch {
    fn new(kernel: Kernel) -> Self {
        let log_value = kernel.log_first();
        let value = log_value.exp();
        Branch { kernel, next_index: 0, value, log_value, in_log: value < LOG_DOMAIN_CUTOFF }
    }

    fn current(&self) -> f64 {
        if self.in_log {
            self.log_value.exp()
        } else {
            self.value
        }
    }

    fn advance(&mut self) {
        let ratio = self.kernel.ratio(self.next_index);
        self.next_index += 1;
        if self.in_log {
            self.log_value += ratio.ln();
            if self.log_value > LOG_DOMAIN_CUTOFF.ln() {
                self.in_log = false;
                self.value = self.log_value.exp();
            }
        } else {
            let next = self.value * ratio;
            if next < LOG_DOMAIN_CUTOFF {
                self.in_log = true;
                self.log_value = self.value.ln() + ratio.ln();
            } else {
                self.value = next;
            }
        }
    }

    /// Bound on `Σ_{i ≥ next_index} r_i`.
    fn tail_bound(&self) -> f64 {
        let theta = self.kernel.ratio_sup_from(self.next_index);
        if theta >= 1.0 {
            f64::INFINITY
        } else {
            self.current() / (1.0 - theta)
        }
    }
}

/// Iterator-like generator over `r_0, r_1, …` for one service law.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    branches: Vec<(f64, Branch)>,
}

impl WeightSequence {
    pub fn next_weight(&mut self) -> f64 {
        let mut total = 0.0;
        for (w, b) in &mut self.branches {
            total += *w * b.current();
            b.advance();
        }
        total
    }

    /// Bound on the sum of all weights not yet produced.
    pub fn tail_bound(&self) -> f64 {
        self.branches.iter().map(|(w, b)| w * b.tail_bound()).sum()
    }
}

impl Iterator for WeightSequence {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_weight())
    }
}

impl fmt::Display for ServiceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::Erlang { shape, rate } => write!(f, "erlang:{shape}:{rate}"),
            Self::Gamma { shape, rate } => write!(f, "gamma:{shape}:{rate}"),
            Self::Deterministic { duration } => write!(f, "det:{duration}"),
            Self::HyperExponential { weights, rates } => {
                write!(f, "hyper")?;
                for (w, r) in weights.iter().zip(rates) {
                    write!(f, ":{w}:{r}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses the compact flag grammar: `exp:<rate>`, `erlang:<shape>:<rate>`,
/// `gamma:<shape>:<rate>`, `det:<duration>`, `hyper:<w1>:<r1>:<w2>:<r2>[...]`.
impl FromStr for ServiceDistribution {
    type Err = DamError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let tag = parts.next().unwrap_or_default().to_ascii_lowercase();
        let nums = parts
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| DamError::invalid(format!("bad number {p:?} in distribution {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let arity = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(DamError::invalid(format!(
                    "distribution {s:?} expects {n} parameter(s), got {}",
                    nums.len()
                )))
            }
        };
        match tag.as_str() {
            "exp" | "exponential" => {
                arity(1)?;
                Self::exponential(nums[0])
            }
            "erlang" => {
                arity(2)?;
                if nums[0].fract() != 0.0 || nums[0] < 1.0 || nums[0] > f64::from(u32::MAX) {
                    return Err(DamError::invalid(format!(
                        "erlang shape must be a positive integer, got {}",
                        nums[0]
                    )));
                }
                Self::erlang(nums[0] as u32, nums[1])
            }
            "gamma" => {
                arity(2)?;
                Self::gamma(nums[0], nums[1])
            }
            "det" | "deterministic" => {
                arity(1)?;
                Self::deterministic(nums[0])
            }
            "hyper" | "hyperexponential" => {
                if nums.is_empty() || nums.len() % 2 != 0 {
                    return Err(DamError::invalid(format!(
                        "hyperexponential {s:?} needs weight:rate pairs"
                    )));
                }
                let (weights, rates) = nums.chunks(2).map(|c| (c[0], c[1])).unzip();
                Self::hyper_exponential(weights, rates)
            }
            other => Err(DamError::invalid(format!("unknown distribution family {other:?}"))),
        }
    }
}
