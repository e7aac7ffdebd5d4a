//! Truncated formal power series.

use crate::error::{DamError, Result};

/// First `n + 1` coefficients of `num(z) / den(z)`. Missing coefficients are
/// taken as zero.
pub fn divide(num: &[f64], den: &[f64], n: usize) -> Result<Vec<f64>> {
    let d0 = den.first().copied().unwrap_or(0.0);
    if d0 == 0.0 || !d0.is_finite() {
        return Err(DamError::NumericDegeneracy(format!(
            "power-series division needs a nonzero constant term, got {d0}"
        )));
    }
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut acc = num.get(k).copied().unwrap_or(0.0);
        for i in 1..=k.min(den.len().saturating_sub(1)) {
            acc -= den[i] * out[k - i];
        }
        out.push(acc / d0);
    }
    Ok(out)
}

/// First `n + 1` coefficients of the product.
pub fn multiply(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            (0..=k)
                .filter_map(|i| Some(a.get(i)? * b.get(k - i)?))
                .sum()
        })
        .collect()
}
