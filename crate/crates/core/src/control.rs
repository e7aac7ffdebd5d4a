//! Choice of the normal-regime output rate.
//!
//! The cost regime is fixed by comparing `j1` with `j2·ρ2/(1-ρ2)`:
//! equality puts the optimum at critical load `ρ1 = 1`; a heavier lower
//! penalty pushes `ρ1` above 1, a heavier upper penalty below 1. The offset
//! is `C/L`, with `C` minimizing the matching limiting cost functional.
//! [`optimize_exact`] instead minimizes the finite-level cost `J(L)`
//! directly over `ρ1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, critical_rho12, CostModel, DamModel, Precision};
use crate::asymptotics::{j_lower, j_upper};
use crate::distributions::ServiceDistribution;
use crate::error::{DamError, Result};
use crate::minimize::{self, Minimum};

/// Relative tolerance for deciding `j1 = j2·ρ2/(1-ρ2)`.
pub const BALANCE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostRegime {
    /// `j1 = j2·ρ2/(1-ρ2)`: optimum at `ρ1 = 1`.
    Critical,
    /// `j1 > j2·ρ2/(1-ρ2)`: optimum at `ρ1 = 1 + C/L`.
    UpperPenalized,
    /// `j1 < j2·ρ2/(1-ρ2)`: optimum at `ρ1 = 1 - C/L`.
    LowerPenalized,
}

impl CostRegime {
    fn sign(self) -> f64 {
        match self {
            CostRegime::Critical => 0.0,
            CostRegime::UpperPenalized => 1.0,
            CostRegime::LowerPenalized => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Asymptotic,
    Exact,
}

/// Recommended operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSolution {
    pub regime: CostRegime,
    pub c_star: f64,
    /// `rho1_star - 1`.
    pub delta_star: f64,
    pub rho1_star: f64,
    /// Recommended mean of `b1`, `rho1_star / λ`.
    pub b1_star: f64,
    pub predicted_cost: f64,
    pub mode: SolveMode,
    pub level: usize,
    /// Minimizer of the literal functional over `C > 0`, when it differs in
    /// kind from `c_star` (lower-penalized regime only; see [`optimize_asymptotic`]).
    pub interior_c: Option<f64>,
    pub interior_cost: Option<f64>,
}

fn check_rho2(rho2: f64) -> Result<()> {
    if rho2.is_finite() && rho2 > 0.0 && rho2 < 1.0 {
        Ok(())
    } else {
        Err(DamError::invalid(format!("rho2 must lie in (0, 1), got {rho2}")))
    }
}

pub fn classify_regime(costs: &CostModel, rho2: f64) -> Result<CostRegime> {
    check_rho2(rho2)?;
    costs.validate()?;
    let balance = costs.j2 * rho2 / (1.0 - rho2);
    let scale = costs.j1.abs().max(balance.abs());
    Ok(if (costs.j1 - balance).abs() <= BALANCE_RTOL * scale {
        CostRegime::Critical
    } else if costs.j1 > balance {
        CostRegime::UpperPenalized
    } else {
        CostRegime::LowerPenalized
    })
}

/// Inputs of the limiting control problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticProblem {
    pub lambda: f64,
    pub rho2: f64,
    /// `ρ̃₁₂` of the `b1` family at unit load.
    pub rho12_tilde: f64,
    pub level: usize,
    pub costs: CostModel,
    /// Upper end of the search interval for `C`; defaults to `10·ρ̃₁₂`.
    pub c_max: Option<f64>,
}

impl AsymptoticProblem {
    pub fn new(lambda: f64, rho2: f64, rho12_tilde: f64, level: usize, costs: CostModel) -> Self {
        AsymptoticProblem { lambda, rho2, rho12_tilde, level, costs, c_max: None }
    }

    pub fn c_max(&self) -> f64 {
        self.c_max.unwrap_or(10.0 * self.rho12_tilde)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(DamError::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.rho12_tilde.is_finite() && self.rho12_tilde > 0.0) {
            return Err(DamError::invalid(format!("rho12 must be positive, got {}", self.rho12_tilde)));
        }
        if self.level < 1 {
            return Err(DamError::invalid("level must be at least 1"));
        }
        let c_max = self.c_max();
        if !(c_max.is_finite() && c_max > 0.0) {
            return Err(DamError::invalid(format!("c_max must be positive, got {c_max}")));
        }
        check_rho2(self.rho2)?;
        self.costs.validate()
    }
}

pub const C_GRID_POINTS: usize = 256;
pub const C_TOL: f64 = 1e-8;

/// Minimizes `j_upper` on `[0, c_max]`.
pub fn minimize_upper(problem: &AsymptoticProblem) -> Result<Minimum> {
    problem.validate()?;
    let AsymptoticProblem { rho12_tilde, rho2, costs, .. } = *problem;
    let f = |c: f64| j_upper(c, rho12_tilde, rho2, &costs).unwrap_or(f64::INFINITY);
    Ok(minimize::grid_then_golden(f, 0.0, problem.c_max(), C_GRID_POINTS, C_TOL))
}

/// Minimizes `j_lower` on `[0, c_max]`, with `j_lower(0)` read as its
/// critical-load extension.
pub fn minimize_lower(problem: &AsymptoticProblem) -> Result<Minimum> {
    problem.validate()?;
    let AsymptoticProblem { rho12_tilde, rho2, costs, .. } = *problem;
    let f = |c: f64| j_lower(c, rho12_tilde, rho2, &costs).unwrap_or(f64::INFINITY);
    Ok(minimize::grid_then_golden(f, 0.0, problem.c_max(), C_GRID_POINTS, C_TOL))
}

/// Minimizes the literal `j_lower` over `C > 0`, i.e. on
/// `[c_max / C_GRID_POINTS, c_max]`, ignoring the extension at zero.
pub fn minimize_lower_interior(problem: &AsymptoticProblem) -> Result<Minimum> {
    problem.validate()?;
    let AsymptoticProblem { rho12_tilde, rho2, costs, .. } = *problem;
    let f = |c: f64| j_lower(c, rho12_tilde, rho2, &costs).unwrap_or(f64::INFINITY);
    let hi = problem.c_max();
    Ok(minimize::grid_then_golden(f, hi / C_GRID_POINTS as f64, hi, C_GRID_POINTS, C_TOL))
}

/// Solves the limiting control problem.
///
/// In the lower-penalized regime the extension `j_lower(0)` (the
/// critical-load cost) is never above the literal functional for `C > 0`,
/// so `c_star` is 0 there; the minimizer of the literal functional over
/// `C > 0` is reported in `interior_c` for comparison.
pub fn optimize_asymptotic(problem: &AsymptoticProblem) -> Result<ControlSolution> {
    problem.validate()?;
    let regime = classify_regime(&problem.costs, problem.rho2)?;
    let (best, interior) = match regime {
        CostRegime::Critical => {
            // Balanced costs make both halves of the critical cost equal to
            // j1·ρ̃/2; using j1 directly keeps rounding out of the result.
            (Minimum { x: 0.0, value: problem.costs.j1 * problem.rho12_tilde }, None)
        }
        CostRegime::UpperPenalized => (minimize_upper(problem)?, None),
        CostRegime::LowerPenalized => (minimize_lower(problem)?, Some(minimize_lower_interior(problem)?)),
    };
    let level = problem.level as f64;
    let delta_star = regime.sign() * best.x / level;
    let rho1_star = 1.0 + delta_star;
    Ok(ControlSolution {
        regime,
        c_star: best.x,
        delta_star,
        rho1_star,
        b1_star: rho1_star / problem.lambda,
        predicted_cost: best.value,
        mode: SolveMode::Asymptotic,
        level: problem.level,
        interior_c: interior.map(|m| m.x),
        interior_cost: interior.map(|m| m.value),
    })
}

/// Inputs of the finite-level control problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactProblem {
    pub lambda: f64,
    /// Shape of the `b1` family; only its mean is varied.
    pub shape: ServiceDistribution,
    pub b2: ServiceDistribution,
    pub level: usize,
    pub costs: CostModel,
    pub rho1_range: (f64, f64),
    pub precision: Precision,
}

pub const EXACT_GRID_POINTS: usize = 1024;
pub const RHO_TOL: f64 = 1e-8;

impl ExactProblem {
    pub fn new(lambda: f64, shape: ServiceDistribution, b2: ServiceDistribution, level: usize, costs: CostModel) -> Self {
        ExactProblem { lambda, shape, b2, level, costs, rho1_range: (0.5, 1.5), precision: Precision::Double }
    }

    /// Model with `b1` rescaled to load `rho1`.
    pub fn model_at(&self, rho1: f64) -> Result<DamModel> {
        let b1 = self.shape.scale_to_mean(rho1 / self.lambda)?;
        DamModel::new(self.lambda, b1, self.b2.clone(), self.level)
    }

    /// `J(L)` at load `rho1`.
    pub fn cost_at(&self, rho1: f64) -> Result<f64> {
        let model = self.model_at(rho1)?;
        Ok(analytics::stationary_metrics_with(&model, &self.costs, self.precision)?.cost)
    }
}

/// Minimizes the exact `J(L)` over `ρ1` in `rho1_range`.
pub fn optimize_exact(problem: &ExactProblem) -> Result<ControlSolution> {
    let (lo, hi) = problem.rho1_range;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(DamError::invalid(format!("rho1 range must satisfy 0 < lo < hi, got ({lo}, {hi})")));
    }
    problem.costs.validate()?;
    // Surface configuration and numeric errors up front rather than as
    // infinite grid values.
    let probe = problem.model_at(lo)?;
    let rho2 = probe.rho2();
    let regime = classify_regime(&problem.costs, rho2)?;
    let endpoint_errors: Vec<DamError> = [lo, hi]
        .par_iter()
        .filter_map(|&r| problem.cost_at(r).err())
        .collect();
    if let Some(e) = endpoint_errors.into_iter().next() {
        return Err(e);
    }

    let f = |rho1: f64| problem.cost_at(rho1).unwrap_or(f64::INFINITY);
    let best = minimize::grid_then_golden(f, lo, hi, EXACT_GRID_POINTS, RHO_TOL);
    let delta_star = best.x - 1.0;
    Ok(ControlSolution {
        regime,
        c_star: problem.level as f64 * delta_star.abs(),
        delta_star,
        rho1_star: best.x,
        b1_star: best.x / problem.lambda,
        predicted_cost: best.value,
        mode: SolveMode::Exact,
        level: problem.level,
        interior_c: None,
        interior_cost: None,
    })
}

/// Builds the limiting problem that corresponds to an exact one.
pub fn asymptotic_counterpart(problem: &ExactProblem) -> Result<AsymptoticProblem> {
    let rho2 = problem.lambda * problem.b2.mean();
    Ok(AsymptoticProblem::new(
        problem.lambda,
        rho2,
        critical_rho12(problem.lambda, &problem.shape)?,
        problem.level,
        problem.costs,
    ))
}

/// One row of a cost-functional table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub c: f64,
    pub j_upper: f64,
    pub j_lower: f64,
}

/// `(C, j_upper(C), j_lower(C))` over a grid of `C` values.
pub fn cost_sweep(c_grid: &[f64], rho12_tilde: f64, rho2: f64, costs: &CostModel) -> Result<Vec<SweepRow>> {
    if c_grid.is_empty() {
        return Err(DamError::invalid("C grid is empty"));
    }
    c_grid
        .iter()
        .map(|&c| {
            Ok(SweepRow {
                c,
                j_upper: j_upper(c, rho12_tilde, rho2, costs)?,
                j_lower: j_lower(c, rho12_tilde, rho2, costs)?,
            })
        })
        .collect()
}
