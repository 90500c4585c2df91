//! Exact RDP of the Poisson-subsampled Gaussian mechanism.
//!
//! Integer orders use the binomial expansion of `E[(mu_1 / mu_0)^alpha]` for
//! the mixture `mu_1 = (1-q) N(0, s^2) + q N(1, s^2)`; fractional orders use
//! the two-sided split at `z0 = s^2 ln(1/q - 1) + 1/2`, with the generalised
//! binomial series truncated once terms fall below `e^-30`.

use crate::error::{domain, Error, Result};
use crate::specfn::{log_binomial, log_sum_exp, signed_log_sum_exp, SignedLog};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, SQRT_2};

pub const DEFAULT_MAX_ORDER: f64 = 256.0;
const SERIES_CUTOFF: f64 = -30.0;
const MAX_SERIES_TERMS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledGaussian {
    sigma: f64,
    gamma: f64,
    max_order: f64,
}

impl SampledGaussian {
    pub fn new(sigma: f64, gamma: f64) -> Result<Self> {
        Self::with_max_order(sigma, gamma, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order(sigma: f64, gamma: f64, max_order: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(domain(format!("noise multiplier must be > 0, got {sigma}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(domain(format!(
                "sampling rate must lie in [0, 1], got {gamma}"
            )));
        }
        if !(max_order > 1.0) {
            return Err(domain("maximum order must exceed 1"));
        }
        Ok(SampledGaussian {
            sigma,
            gamma,
            max_order,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn max_order(&self) -> f64 {
        self.max_order
    }

    /// RDP at order `alpha`; at `alpha = 1` the convexity bound `q / (2 s^2)`.
    pub fn rdp(&self, alpha: f64) -> Result<f64> {
        if !(alpha >= 1.0) {
            return Err(domain(format!("Rényi order must be >= 1, got {alpha}")));
        }
        let (q, s) = (self.gamma, self.sigma);
        if q == 0.0 {
            return Ok(0.0);
        }
        if q == 1.0 {
            return Ok(alpha / (2.0 * s * s));
        }
        if alpha == 1.0 {
            return Ok(q / (2.0 * s * s));
        }
        if alpha.is_infinite() {
            return Ok(f64::INFINITY);
        }
        let log_a = if alpha.fract() == 0.0 {
            log_a_int(q, s, alpha as u64)?
        } else {
            log_a_frac(q, s, alpha)?
        };
        Ok((log_a / (alpha - 1.0)).max(0.0))
    }
}

fn log_a_int(q: f64, s: f64, alpha: u64) -> Result<f64> {
    let a = alpha as f64;
    let (lq, l1q) = (q.ln(), (-q).ln_1p());
    let terms = (0..=alpha)
        .map(|i| {
            let i = i as f64;
            Ok(log_binomial(a, i)? + i * lq + (a - i) * l1q + (i * i - i) / (2.0 * s * s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(log_sum_exp(&terms))
}

fn log_a_frac(q: f64, s: f64, alpha: f64) -> Result<f64> {
    let (lq, l1q) = (q.ln(), (-q).ln_1p());
    let z0 = s * s * (1.0 / q - 1.0).ln() + 0.5;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let (mut log_coef, mut negative) = (0.0_f64, false);
    for i in 0..MAX_SERIES_TERMS {
        let fi = i as f64;
        if i > 0 {
            let factor = alpha - (fi - 1.0);
            log_coef += factor.abs().ln() - fi.ln();
            if factor < 0.0 {
                negative = !negative;
            }
        }
        let j = alpha - fi;
        let t0 = log_coef + fi * lq + j * l1q;
        let t1 = log_coef + j * lq + fi * l1q;
        let e0 = -LN_2 + log_erfc((fi - z0) / (SQRT_2 * s));
        let e1 = -LN_2 + log_erfc((z0 - j) / (SQRT_2 * s));
        let s0 = t0 + (fi * fi - fi) / (2.0 * s * s) + e0;
        let s1 = t1 + (j * j - j) / (2.0 * s * s) + e1;
        lower.push(SignedLog {
            log_abs: s0,
            negative,
        });
        upper.push(SignedLog {
            log_abs: s1,
            negative,
        });
        if fi > alpha && s0.max(s1) < SERIES_CUTOFF {
            let a0 = signed_log_sum_exp(&lower)?.into_positive()?;
            let a1 = signed_log_sum_exp(&upper)?.into_positive()?;
            return Ok(log_sum_exp(&[a0.ln(), a1.ln()]));
        }
    }
    Err(Error::Optimisation(format!(
        "fractional-order series did not converge at alpha = {alpha}"
    )))
}

/// `ln erfc(x)`, with the asymptotic expansion where `erfc` underflows.
pub(crate) fn log_erfc(x: f64) -> f64 {
    if x < 25.0 {
        return libm::erfc(x).ln();
    }
    let inv2 = 1.0 / (2.0 * x * x);
    // 1 - 1/(2x^2) + 3/(2x^2)^2 - 15/(2x^2)^3
    let series = 1.0 - inv2 + 3.0 * inv2 * inv2 - 15.0 * inv2 * inv2 * inv2;
    -x * x - (x * PI.sqrt()).ln() + series.ln()
}
