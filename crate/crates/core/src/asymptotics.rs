//! Large-level limits of `p1`, `p2` and of the long-run cost.
//!
//! Notation: `ρ̃₁₂` is the normalized second moment of `b1` at unit load,
//! `δ = |ρ1 - 1|` and `C = L·δ` couples the level with the load deviation.

use serde::{Deserialize, Serialize};

use crate::analytics::{CostModel, DamModel};
use crate::distributions::ServiceDistribution;
use crate::error::{DamError, Result};

/// Load regime of `b1` relative to the critical value `ρ1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum AsymptoticRegime {
    Subcritical,
    Critical,
    Supercritical,
    /// `ρ1 = 1 + δ` with `C = lim Lδ`.
    HeavyUpper { delta: f64, c: f64 },
    /// `ρ1 = 1 - δ` with `C = lim Lδ`.
    HeavyLower { delta: f64, c: f64 },
}

impl AsymptoticRegime {
    /// Fixed-load classification of `ρ1`.
    pub fn of_load(rho1: f64) -> Self {
        if rho1 < 1.0 {
            AsymptoticRegime::Subcritical
        } else if rho1 > 1.0 {
            AsymptoticRegime::Supercritical
        } else {
            AsymptoticRegime::Critical
        }
    }

    /// Heavy-traffic reading of `ρ1` at a finite level, with `δ = |ρ1 - 1|`
    /// and `C = level · δ`.
    pub fn heavy(rho1: f64, level: usize) -> Self {
        let delta = (rho1 - 1.0).abs();
        let c = level as f64 * delta;
        if rho1 > 1.0 {
            AsymptoticRegime::HeavyUpper { delta, c }
        } else if rho1 < 1.0 {
            AsymptoticRegime::HeavyLower { delta, c }
        } else {
            AsymptoticRegime::Critical
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match *self {
            AsymptoticRegime::HeavyUpper { delta, .. } | AsymptoticRegime::HeavyLower { delta, .. } => Some(delta),
            _ => None,
        }
    }

    pub fn c(&self) -> Option<f64> {
        match *self {
            AsymptoticRegime::HeavyUpper { c, .. } | AsymptoticRegime::HeavyLower { c, .. } => Some(c),
            _ => None,
        }
    }
}

fn check_rho2(rho2: f64) -> Result<()> {
    if rho2.is_finite() && (0.0..1.0).contains(&rho2) {
        Ok(())
    } else {
        Err(DamError::invalid(format!("rho2 must lie in [0, 1), got {rho2}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DamError::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// `(lim p1, lim p2) = (1 - ρ1, 0)` for `ρ1 < 1`.
pub fn limit_subcritical(rho1: f64) -> Result<(f64, f64)> {
    if !(rho1 > 0.0 && rho1 < 1.0) {
        return Err(DamError::regime(format!("subcritical limit needs 0 < rho1 < 1, got {rho1}")));
    }
    Ok((1.0 - rho1, 0.0))
}

/// `(lim L·p1, lim L·p2)` at `ρ1 = 1`.
pub fn critical_decay(rho12: f64, rho2: f64) -> Result<(f64, f64)> {
    check_positive("rho12", rho12)?;
    check_rho2(rho2)?;
    let half = rho12 / 2.0;
    Ok((half, rho2 / (1.0 - rho2) * half))
}

const ROOT_SCAN_STEPS: i32 = 64;
const ROOT_SCAN_GAP: f64 = 1e-9;

/// Least root in `(0, 1)` of `z = B̂1(λ - λz)`; exists iff `ρ1 > 1`.
///
/// The interval `[0, 1 - 1e-9]` is scanned on a grid that is geometric in
/// the distance to 1, so the first sign change of `B̂1(λ - λz) - z`
/// isolates the least root rather than the trivial root at `z = 1`. The
/// bracket is then refined by Newton steps that fall back to bisection.
pub fn root_phi(lambda: f64, b1: &ServiceDistribution) -> Result<f64> {
    check_positive("lambda", lambda)?;
    let rho1 = lambda * b1.mean();
    if rho1 <= 1.0 {
        return Err(DamError::regime(format!("no root in (0, 1) unless rho1 > 1, got {rho1}")));
    }
    let g = |z: f64| -> Result<f64> { Ok(b1.lst(lambda - lambda * z)? - z) };
    let dg = |z: f64| -> Result<f64> { Ok(-lambda * b1.lst_derivative(lambda - lambda * z)? - 1.0) };

    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=ROOT_SCAN_STEPS {
        let z = 1.0 - ROOT_SCAN_GAP.powf(f64::from(k) / f64::from(ROOT_SCAN_STEPS));
        if g(z)? <= 0.0 {
            hi = Some(z);
            break;
        }
        lo = z;
    }
    let mut hi = hi.ok_or_else(|| {
        DamError::NumericDegeneracy(format!("root for rho1 = {rho1} lies within {ROOT_SCAN_GAP} of 1"))
    })?;
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gz = g(z)?;
        if gz == 0.0 {
            return Ok(z);
        }
        if gz > 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - gz / dg(z)?;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 1e-16 * z.max(1e-300) || hi - lo <= f64::EPSILON * hi {
            return Ok(next);
        }
        z = next;
    }
    Ok(z)
}

/// Constants of the supercritical limit: `p1(L) ≈ p1_prefactor · φ^L`,
/// `p2(L) → p2_limit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupercriticalLimits {
    pub p1_prefactor: f64,
    pub p2_limit: f64,
    pub phi: f64,
}

pub fn supercritical(model: &DamModel) -> Result<SupercriticalLimits> {
    model.validate()?;
    let (rho1, rho2) = (model.rho1(), model.rho2());
    let phi = root_phi(model.lambda, &model.b1)?;
    let slope = 1.0 + model.lambda * model.b1.lst_derivative(model.lambda - model.lambda * phi)?;
    Ok(SupercriticalLimits {
        p1_prefactor: (1.0 - rho2) * slope / (rho1 - rho2),
        p2_limit: rho2 * (rho1 - 1.0) / (rho1 - rho2),
        phi,
    })
}

fn check_heavy(delta: f64, c: f64, rho12: f64, rho2: f64) -> Result<()> {
    check_positive("delta", delta)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(DamError::regime(format!(
            "heavy-traffic formulas need C > 0 (got {c}); use the critical limits for C = 0"
        )));
    }
    check_positive("rho12", rho12)?;
    check_rho2(rho2)
}

/// `(p1, p2)` for `ρ1 = 1 + δ`, `Lδ → C > 0`.
pub fn heavy_upper(delta: f64, c: f64, rho12: f64, rho2: f64) -> Result<(f64, f64)> {
    check_heavy(delta, c, rho12, rho2)?;
    let x = 2.0 * c / rho12;
    let p1 = delta / x.exp_m1();
    // e^x / (e^x - 1) = 1 / (1 - e^{-x})
    let p2 = delta * rho2 / (1.0 - rho2) / -(-x).exp_m1();
    Ok((p1, p2))
}

/// Lower heavy-traffic approximation, evaluated literally with exponent
/// `ρ̃₁₂ / (2C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyLowerApprox {
    pub p1: f64,
    pub p2: f64,
    /// The `Eν_L^(1)` approximation `1 / (δ e^{ρ̃₁₂/(2C)})` behind `p1`, `p2`.
    pub e_nu1: f64,
}

/// `(p1, p2)` for `ρ1 = 1 - δ`, `Lδ → C > 0`.
///
/// The exponent `ρ̃₁₂/(2C)` grows without bound as `C → 0`, so this
/// expression does not reduce to the critical limits there; compare it with
/// the exact values before relying on it.
pub fn heavy_lower(delta: f64, c: f64, rho12: f64, rho2: f64) -> Result<HeavyLowerApprox> {
    check_heavy(delta, c, rho12, rho2)?;
    let y = rho12 / (2.0 * c);
    Ok(HeavyLowerApprox {
        p1: delta * y.exp(),
        p2: delta * rho2 / (1.0 - rho2) * y.exp_m1(),
        e_nu1: (-y).exp() / delta,
    })
}

fn check_functional(c: f64, rho12: f64, rho2: f64, costs: &CostModel) -> Result<()> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(DamError::invalid(format!("C must be finite and nonnegative, got {c}")));
    }
    check_positive("rho12", rho12)?;
    check_rho2(rho2)?;
    costs.validate()
}

/// Limit of `j1·L·p1 + j2·L·p2` as `C → 0` (the critical-load cost).
pub fn critical_cost(rho12: f64, rho2: f64, costs: &CostModel) -> f64 {
    rho12 / 2.0 * (costs.j1 + costs.j2 * rho2 / (1.0 - rho2))
}

/// Limiting cost for `ρ1 = 1 + C/L`; continuous at `C = 0`.
pub fn j_upper(c: f64, rho12: f64, rho2: f64, costs: &CostModel) -> Result<f64> {
    check_functional(c, rho12, rho2, costs)?;
    if c == 0.0 {
        return Ok(critical_cost(rho12, rho2, costs));
    }
    let x = 2.0 * c / rho12;
    let lower_part = costs.j1 * c / x.exp_m1();
    let upper_part = costs.j2 * rho2 / (1.0 - rho2) * c / -(-x).exp_m1();
    Ok(lower_part + upper_part)
}

/// Limiting cost for `ρ1 = 1 - C/L`, evaluated literally for `C > 0`.
/// At `C = 0` the critical-load cost is returned, since the literal
/// expression diverges there.
pub fn j_lower(c: f64, rho12: f64, rho2: f64, costs: &CostModel) -> Result<f64> {
    check_functional(c, rho12, rho2, costs)?;
    if c == 0.0 {
        return Ok(critical_cost(rho12, rho2, costs));
    }
    let y = rho12 / (2.0 * c);
    // Skip zero-rate terms so that 0 · ∞ does not poison the sum.
    let mut total = 0.0;
    if costs.j1 > 0.0 {
        total += costs.j1 * c * y.exp();
    }
    if costs.j2 > 0.0 && rho2 > 0.0 {
        total += costs.j2 * rho2 / (1.0 - rho2) * c * y.exp_m1();
    }
    Ok(total)
}
