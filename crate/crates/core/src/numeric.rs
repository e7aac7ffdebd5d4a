//! Small floating-point helpers shared by the recurrences.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// A positive real stored as `mantissa · 2^exponent`, for quantities that
/// outgrow the `f64` range (busy-period counts in the supercritical regime).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledFloat {
    pub mantissa: f64,
    pub exponent: i64,
}

impl ScaledFloat {
    pub const ONE: ScaledFloat = ScaledFloat { mantissa: 1.0, exponent: 0 };

    /// Normalizes so that the mantissa lies in `[0.5, 1)` (or is zero).
    pub fn new(mantissa: f64, exponent: i64) -> Self {
        if mantissa == 0.0 || !mantissa.is_finite() {
            return ScaledFloat { mantissa, exponent: 0 };
        }
        let (m, e) = frexp(mantissa);
        ScaledFloat { mantissa: m, exponent: exponent + e }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::new(x, 0)
    }

    /// Nearest `f64`; saturates to infinity or zero outside the range.
    pub fn to_f64(self) -> f64 {
        ldexp(self.mantissa, self.exponent)
    }

    /// `1 / self` as an `f64`, flushing to zero on underflow.
    pub fn recip_f64(self) -> f64 {
        ldexp(1.0 / self.mantissa, -self.exponent)
    }

    pub fn ln(self) -> f64 {
        self.mantissa.ln() + self.exponent as f64 * std::f64::consts::LN_2
    }

    /// `self / other` as an `f64`.
    pub fn ratio(self, other: ScaledFloat) -> f64 {
        ldexp(self.mantissa / other.mantissa, self.exponent - other.exponent)
    }

    pub fn mul_f64(self, x: f64) -> Self {
        Self::new(self.mantissa * x, self.exponent)
    }
}

impl PartialOrd for ScaledFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (a, b) = (Self::new(self.mantissa, self.exponent), Self::new(other.mantissa, other.exponent));
        if a.mantissa == 0.0 || b.mantissa == 0.0 || a.exponent == b.exponent {
            return a.mantissa.partial_cmp(&b.mantissa);
        }
        // Both nonzero and normalized: compare signs, then exponents.
        match (a.mantissa > 0.0, b.mantissa > 0.0) {
            (true, false) => Some(Ordering::Greater),
            (false, true) => Some(Ordering::Less),
            (true, true) => Some(a.exponent.cmp(&b.exponent)),
            (false, false) => Some(b.exponent.cmp(&a.exponent)),
        }
    }
}

impl fmt::Display for ScaledFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.to_f64();
        if x.is_finite() && x != 0.0 {
            return write!(f, "{x}");
        }
        let log10 = self.ln() / std::f64::consts::LN_10;
        let e = log10.floor();
        write!(f, "{}e{}", 10f64.powf(log10 - e), e as i64)
    }
}

/// `x = m · 2^e` with `|m|` in `[0.5, 1)`.
pub fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    if raw_exp == 0 {
        // subnormal
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let e = raw_exp - 1022;
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, e)
}

/// `m · 2^e`, saturating.
pub fn ldexp(m: f64, e: i64) -> f64 {
    let mut x = m;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if !x.is_finite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}
