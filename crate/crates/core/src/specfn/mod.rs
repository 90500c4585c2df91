//! Log-domain special functions.
//!
//! Everything that scales like `x^p` with `p` in the tens of thousands is
//! carried as a natural logarithm. Only user-facing numbers are exponentiated.

mod bessel;
mod gamma;

pub use bessel::{
    bessel_ratio_consecutive, log_bessel_i, log_bessel_i_regime, log_bessel_ratio,
    log_bessel_ratio_scaled, BESSEL_HANKEL_MIN_X, BESSEL_UNIFORM_MIN_ORDER,
};
pub use gamma::{log_binomial, log_gamma};

use crate::error::{domain, Error, Result};
use std::f64::consts::PI;

/// Natural logarithm of a positive quantity.
///
/// `f64::NEG_INFINITY` stands for an exact zero (for example `I_nu(0)` with
/// `nu > 0`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct LogValue(pub f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    pub fn ln(self) -> f64 {
        self.0
    }

    /// The represented quantity; `+inf` when it overflows `f64`.
    pub fn to_linear(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl From<LogValue> for f64 {
    fn from(v: LogValue) -> f64 {
        v.0
    }
}

/// A signed quantity stored as `sign * exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub log_abs: f64,
    pub negative: bool,
}

impl SignedLog {
    pub fn positive(log_abs: f64) -> Self {
        SignedLog {
            log_abs,
            negative: false,
        }
    }

    pub fn negative(log_abs: f64) -> Self {
        SignedLog {
            log_abs,
            negative: true,
        }
    }

    /// Fails with [`Error::Cancellation`] if the value is not strictly positive.
    pub fn into_positive(self) -> Result<LogValue> {
        if self.negative || self.log_abs == f64::NEG_INFINITY {
            Err(Error::Cancellation)
        } else {
            Ok(LogValue(self.log_abs))
        }
    }

    pub fn to_linear(self) -> f64 {
        let m = self.log_abs.exp();
        if self.negative {
            -m
        } else {
            m
        }
    }
}

/// `ln(sum_i exp(x_i))` with the maximum factored out.
///
/// Returns `-inf` for an empty slice or when every term is `-inf`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    if terms.len() == 1 {
        return max;
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Signed log-sum-exp. An exact cancellation to zero is reported as an error.
pub fn signed_log_sum_exp(terms: &[SignedLog]) -> Result<SignedLog> {
    if terms.is_empty() {
        return Err(domain("log_sum_exp of an empty list"));
    }
    if terms.len() == 1 {
        return Ok(terms[0]);
    }
    let max = terms
        .iter()
        .map(|t| t.log_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Cancellation);
    }
    if max == f64::INFINITY {
        return Err(domain("infinite term in signed log_sum_exp"));
    }
    // Separate accumulators keep the subtraction to a single step.
    let (mut pos, mut neg) = (0.0_f64, 0.0_f64);
    for t in terms {
        let w = (t.log_abs - max).exp();
        if t.negative {
            neg += w;
        } else {
            pos += w;
        }
    }
    let diff = pos - neg;
    if diff == 0.0 {
        return Err(Error::Cancellation);
    }
    Ok(SignedLog {
        log_abs: max + diff.abs().ln(),
        negative: diff < 0.0,
    })
}

/// `ln` of the surface area of the unit sphere `S^{p-1}` in `R^p`.
pub fn log_sphere_area(p: usize) -> Result<LogValue> {
    if p == 0 {
        return Err(domain("sphere dimension must be at least 1"));
    }
    let half = p as f64 / 2.0;
    Ok(LogValue(
        std::f64::consts::LN_2 + half * PI.ln() - log_gamma(half)?.ln(),
    ))
}

/// `ln` of the volume of the radius-`radius` ball in `R^p`.
pub fn log_ball_volume(p: usize, radius: f64) -> Result<LogValue> {
    if p == 0 {
        return Err(domain("ball dimension must be at least 1"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(domain(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let half = p as f64 / 2.0;
    Ok(LogValue(
        half * PI.ln() + p as f64 * radius.ln() - log_gamma(half + 1.0)?.ln(),
    ))
}
