//! Side-by-side comparison of exact finite-level probabilities with their
//! large-level approximations.
//!
//! Each row pairs the exact `p1(L)`, `p2(L)` with the approximation for the
//! chosen regime. Relative errors are `|exact - approx| / |approx|`; when the
//! approximation is exactly zero (the subcritical `p2` limit) the absolute
//! error is reported instead.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, critical_rho12, DamModel, Precision};
use crate::asymptotics::{critical_decay, heavy_lower, heavy_upper, limit_subcritical, supercritical};
use crate::distributions::ServiceDistribution;
use crate::error::{DamError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyRegime {
    /// Fixed `ρ1 < 1`.
    Subcritical,
    /// `ρ1 = 1`.
    Critical,
    /// Fixed `ρ1 > 1`.
    Supercritical,
    /// `ρ1 = 1 + C/L`.
    HeavyUpper,
    /// `ρ1 = 1 - C/L`.
    HeavyLower,
}

impl VerifyRegime {
    pub const ALL: [VerifyRegime; 5] = [
        VerifyRegime::Subcritical,
        VerifyRegime::Critical,
        VerifyRegime::Supercritical,
        VerifyRegime::HeavyUpper,
        VerifyRegime::HeavyLower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VerifyRegime::Subcritical => "subcritical",
            VerifyRegime::Critical => "critical",
            VerifyRegime::Supercritical => "supercritical",
            VerifyRegime::HeavyUpper => "heavy_upper",
            VerifyRegime::HeavyLower => "heavy_lower",
        }
    }

    fn uses_c(self) -> bool {
        matches!(self, VerifyRegime::HeavyUpper | VerifyRegime::HeavyLower)
    }
}

impl std::str::FromStr for VerifyRegime {
    type Err = DamError;

    fn from_str(s: &str) -> Result<Self> {
        VerifyRegime::ALL
            .into_iter()
            .find(|r| r.name() == s || r.name().replace('_', "-") == s)
            .ok_or_else(|| {
                DamError::invalid(format!(
                    "unknown regime '{s}', expected one of subcritical, critical, supercritical, heavy_upper, heavy_lower"
                ))
            })
    }
}

impl std::fmt::Display for VerifyRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub lambda: f64,
    /// `b1` family; its mean is set from the regime.
    pub shape: ServiceDistribution,
    pub b2: ServiceDistribution,
    pub regime: VerifyRegime,
    pub levels: Vec<usize>,
    /// `C` values for the heavy-traffic regimes.
    pub c_values: Vec<f64>,
    /// Load for the fixed-load regimes.
    pub rho1: Option<f64>,
    pub precision: Precision,
}

impl VerifyConfig {
    pub fn new(lambda: f64, shape: ServiceDistribution, b2: ServiceDistribution, regime: VerifyRegime) -> Self {
        VerifyConfig {
            lambda,
            shape,
            b2,
            regime,
            levels: vec![500, 1000, 2000],
            c_values: vec![0.5, 1.0, 2.0],
            rho1: None,
            precision: Precision::Double,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(DamError::invalid("level grid is empty"));
        }
        if self.levels.contains(&0) {
            return Err(DamError::invalid("levels must be at least 1"));
        }
        if self.regime.uses_c() {
            if self.c_values.is_empty() {
                return Err(DamError::invalid("C grid is empty"));
            }
            if let Some(c) = self.c_values.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
                return Err(DamError::invalid(format!("C values must be positive, got {c}")));
            }
        }
        match (self.regime, self.rho1) {
            (VerifyRegime::Subcritical, Some(r)) if !(r > 0.0 && r < 1.0) => {
                Err(DamError::invalid(format!("subcritical sweep needs 0 < rho1 < 1, got {r}")))
            }
            (VerifyRegime::Supercritical, Some(r)) if !(r > 1.0 && r.is_finite()) => {
                Err(DamError::invalid(format!("supercritical sweep needs rho1 > 1, got {r}")))
            }
            (VerifyRegime::Subcritical | VerifyRegime::Supercritical, None) => {
                Err(DamError::invalid(format!("{} sweep needs rho1", self.regime)))
            }
            _ => Ok(()),
        }
    }

    fn model(&self, rho1: f64, level: usize) -> Result<DamModel> {
        let b1 = self.shape.scale_to_mean(rho1 / self.lambda)?;
        DamModel::new(self.lambda, b1, self.b2.clone(), level)
    }
}

/// One comparison row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub level: usize,
    /// `ρ1 - 1`.
    pub delta: f64,
    /// `L·|ρ1 - 1|`.
    pub c: f64,
    pub p1_exact: f64,
    pub p1_asym: f64,
    pub p1_rel_err: f64,
    pub p2_exact: f64,
    pub p2_asym: f64,
    pub p2_rel_err: f64,
}

impl VerifyRow {
    pub const HEADER: [&'static str; 9] =
        ["L", "delta", "C", "p1_exact", "p1_asym", "p1_rel_err", "p2_exact", "p2_asym", "p2_rel_err"];

    pub fn values(&self) -> [f64; 9] {
        [
            self.level as f64,
            self.delta,
            self.c,
            self.p1_exact,
            self.p1_asym,
            self.p1_rel_err,
            self.p2_exact,
            self.p2_asym,
            self.p2_rel_err,
        ]
    }
}

/// Error behaviour along the level grid for one `C` (or the whole sweep in
/// fixed-load regimes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancySummary {
    pub c: Option<f64>,
    pub max_p1_rel_err: f64,
    pub max_p2_rel_err: f64,
    /// Errors at the largest level.
    pub final_p1_rel_err: f64,
    pub final_p2_rel_err: f64,
    /// Whether the errors shrink strictly as `L` grows.
    pub p1_decreasing: bool,
    pub p2_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyTable {
    pub regime: VerifyRegime,
    pub rows: Vec<VerifyRow>,
    pub summaries: Vec<DiscrepancySummary>,
}

fn discrepancy(exact: f64, approx: f64) -> f64 {
    if approx == 0.0 {
        (exact - approx).abs()
    } else {
        ((exact - approx) / approx).abs()
    }
}

fn row(config: &VerifyConfig, level: usize, c: Option<f64>) -> Result<VerifyRow> {
    let lf = level as f64;
    let rho1 = match config.regime {
        VerifyRegime::Critical => 1.0,
        VerifyRegime::Subcritical | VerifyRegime::Supercritical => config.rho1.unwrap_or(1.0),
        VerifyRegime::HeavyUpper => 1.0 + c.unwrap_or(0.0) / lf,
        VerifyRegime::HeavyLower => 1.0 - c.unwrap_or(0.0) / lf,
    };
    let model = config.model(rho1, level)?;
    let counts = analytics::busy_period_counts_with(&model, config.precision)?;
    let (p1_exact, p2_exact) = analytics::probs_from_count(&model, counts.last());
    let rho2 = model.rho2();
    let rho12_tilde = || critical_rho12(config.lambda, &config.shape);
    let delta = rho1 - 1.0;
    let (p1_asym, p2_asym) = match config.regime {
        VerifyRegime::Subcritical => limit_subcritical(rho1)?,
        VerifyRegime::Critical => {
            let (a, b) = critical_decay(model.rho12(), rho2)?;
            (a / lf, b / lf)
        }
        VerifyRegime::Supercritical => {
            let lim = supercritical(&model)?;
            (lim.p1_prefactor * lim.phi.powf(lf), lim.p2_limit)
        }
        VerifyRegime::HeavyUpper => heavy_upper(delta.abs(), lf * delta.abs(), rho12_tilde()?, rho2)?,
        VerifyRegime::HeavyLower => {
            let h = heavy_lower(delta.abs(), lf * delta.abs(), rho12_tilde()?, rho2)?;
            (h.p1, h.p2)
        }
    };
    Ok(VerifyRow {
        level,
        delta,
        c: lf * delta.abs(),
        p1_exact,
        p1_asym,
        p1_rel_err: discrepancy(p1_exact, p1_asym),
        p2_exact,
        p2_asym,
        p2_rel_err: discrepancy(p2_exact, p2_asym),
    })
}

fn summarize(c: Option<f64>, rows: &[VerifyRow]) -> DiscrepancySummary {
    let mut sorted: Vec<&VerifyRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.level);
    let decreasing = |f: fn(&VerifyRow) -> f64| sorted.windows(2).all(|w| f(w[1]) < f(w[0]));
    let last = sorted[sorted.len() - 1];
    DiscrepancySummary {
        c,
        max_p1_rel_err: rows.iter().map(|r| r.p1_rel_err).fold(0.0, f64::max),
        max_p2_rel_err: rows.iter().map(|r| r.p2_rel_err).fold(0.0, f64::max),
        final_p1_rel_err: last.p1_rel_err,
        final_p2_rel_err: last.p2_rel_err,
        p1_decreasing: decreasing(|r| r.p1_rel_err),
        p2_decreasing: decreasing(|r| r.p2_rel_err),
    }
}

/// Rows for every `(C, L)` pair, ordered by `C` then by the given level order.
pub fn verify_sweep(config: &VerifyConfig) -> Result<VerifyTable> {
    config.validate()?;
    let cs: Vec<Option<f64>> =
        if config.regime.uses_c() { config.c_values.iter().map(|c| Some(*c)).collect() } else { vec![None] };
    let jobs: Vec<(Option<f64>, usize)> =
        cs.iter().flat_map(|c| config.levels.iter().map(move |l| (*c, *l))).collect();
    let rows = jobs.par_iter().map(|(c, l)| row(config, *l, *c)).collect::<Result<Vec<_>>>()?;
    let per_c = config.levels.len();
    let summaries = cs.iter().zip(rows.chunks(per_c)).map(|(c, chunk)| summarize(*c, chunk)).collect();
    Ok(VerifyTable { regime: config.regime, rows, summaries })
}

impl VerifyTable {
    /// Plain-text account of how far the approximation is from the exact
    /// values, one line per `C`.
    pub fn discrepancy_report(&self) -> String {
        let mut out = String::new();
        for s in &self.summaries {
            let label = s.c.map_or_else(|| self.regime.to_string(), |c| format!("{} C={c}", self.regime));
            let trend = |d: bool| if d { "shrinking" } else { "not shrinking" };
            out.push_str(&format!(
                "{label}: p1 rel err max {:.3e}, final {:.3e} ({}); p2 rel err max {:.3e}, final {:.3e} ({})\n",
                s.max_p1_rel_err,
                s.final_p1_rel_err,
                trend(s.p1_decreasing),
                s.max_p2_rel_err,
                s.final_p2_rel_err,
                trend(s.p2_decreasing),
            ));
        }
        if self.regime == VerifyRegime::HeavyLower {
            out.push_str(
                "note: the lower heavy-traffic expression uses the exponent rho12/(2C), which diverges as C -> 0 \
                 instead of approaching the critical limits; the exact values are the reference.\n",
            );
        }
        out
    }
}
