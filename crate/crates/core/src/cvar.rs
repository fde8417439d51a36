//! Empirical conditional value at risk under uniform sample weights.
//!
//! For a sample `z_1..z_K` and level `delta` in `[0, 1)`,
//!
//! ```text
//! CVaR(z) = min_t  t + 1/((1 - delta) K) * sum_i max(z_i - t, 0)
//! ```
//!
//! which equals the average of the largest `(1 - delta) K` values, the
//! boundary value counted fractionally.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, ToPrimitive};

use crate::error::{Error, Result};

/// A nonempty sample of a scalar random quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_values(&values)?;
        Ok(EmpiricalSample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cvar(&self, delta: f64) -> Result<f64> {
        cvar(&self.values, delta)
    }

    pub fn cvar_argmin_t(&self, delta: f64) -> Result<f64> {
        cvar_argmin_t(&self.values, delta)
    }

    pub fn violation_fraction(&self, threshold: f64) -> f64 {
        violation_fraction(&self.values, threshold)
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::dims("empirical sample is empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::dims("empirical sample contains a non-finite value"));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if (0.0..1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::BadDelta(delta))
    }
}

/// Tail mass `(1 - delta) K` in units of samples.
fn tail_mass(k: usize, delta: f64) -> f64 {
    (1.0 - delta) * k as f64
}

/// Scale that turns every finite `f64` into an integer.
const FIXED_SHIFT: usize = 1074;

/// `v * 2^FIXED_SHIFT`, exactly.
fn fixed(v: f64) -> BigInt {
    let (mantissa, exponent, sign) = Float::integer_decode(v);
    let mut out = BigInt::from(mantissa) << (i32::from(exponent) + FIXED_SHIFT as i32) as usize;
    if sign < 0 {
        out = -out;
    }
    out
}

/// Conditional value at risk of `values` at level `delta`.
///
/// The tail average is formed in exact rational arithmetic and rounded once,
/// so the result is monotone in `delta` and lies in `[mean, max]` exactly
/// (with `mean` the correctly rounded sample mean).
pub fn cvar(values: &[f64], delta: f64) -> Result<f64> {
    check_delta(delta)?;
    check_values(values)?;
    let k = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));

    // tail mass (1 - delta) K, scaled by 2^FIXED_SHIFT
    let mass = ((BigInt::from(1) << FIXED_SHIFT) - fixed(delta)) * BigInt::from(k);
    let whole = (&mass >> FIXED_SHIFT).to_usize().unwrap_or(k).min(k);
    let frac = &mass - (BigInt::from(whole) << FIXED_SHIFT);
    let mut acc: BigInt = sorted[..whole].iter().map(|v| fixed(*v)).sum::<BigInt>() << FIXED_SHIFT;
    if whole < k {
        acc += frac * fixed(sorted[whole]);
    }
    let value = BigRational::new(acc, mass << FIXED_SHIFT);
    Ok(value.to_f64().expect("average of finite values is finite"))
}

/// Smallest minimizer of the variational objective, taken over sample values.
///
/// This is the empirical value at risk: the smallest sample value `t` with
/// at most `(1 - delta) K` samples strictly above it.
pub fn cvar_argmin_t(values: &[f64], delta: f64) -> Result<f64> {
    check_delta(delta)?;
    check_values(values)?;
    let k = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = tail_mass(k, delta) * (1.0 + 1e-12);
    let mut i = 0;
    while i < k {
        let above = k - sorted[..].partition_point(|v| *v <= sorted[i]);
        if above as f64 <= m {
            return Ok(sorted[i]);
        }
        i += 1;
    }
    Ok(sorted[k - 1])
}

/// `t + 1/((1 - delta) K) * sum max(z - t, 0)`, the function minimized by [`cvar`].
pub fn cvar_objective(values: &[f64], delta: f64, t: f64) -> Result<f64> {
    check_delta(delta)?;
    check_values(values)?;
    let hinge: f64 = values.iter().map(|v| (v - t).max(0.0)).sum();
    Ok(t + hinge / tail_mass(values.len(), delta))
}

/// Fraction of samples strictly above `threshold`.
pub fn violation_fraction(values: &[f64], threshold: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| **v > threshold).count() as f64 / values.len() as f64
}
