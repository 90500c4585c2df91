//! Modified Bessel function of the first kind, in log domain.
//!
//! Three regimes:
//!
//! * `nu >= BESSEL_UNIFORM_MIN_ORDER`: Debye's uniform large-order expansion,
//!   valid for every `x > 0`.
//! * small order, `x < BESSEL_HANKEL_MIN_X`: the power series, summed outward
//!   from its largest term so nothing overflows.
//! * small order, `x >= BESSEL_HANKEL_MIN_X`: Hankel's large-argument expansion.
//!
//! Differences of log values (ratios) are formed analytically inside each
//! regime instead of subtracting two large logarithms.

use super::{log_gamma, LogValue};
use crate::error::{domain, Error, Result};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Orders at or above this use the uniform asymptotic expansion.
pub const BESSEL_UNIFORM_MIN_ORDER: f64 = 20.0;

/// Below the uniform threshold, arguments at or above this use the
/// large-argument expansion.
pub const BESSEL_HANKEL_MIN_X: f64 = 500.0;

const DEBYE_TERMS: usize = 14;
const SERIES_EPS: f64 = 1e-18;

/// Coefficients (in powers of `t`) of Debye's polynomials `u_0 .. u_{K-1}`,
/// generated from
/// `u_{k+1}(t) = t^2 (1 - t^2) u_k'(t) / 2 + (1/8) int_0^t (1 - 5 s^2) u_k(s) ds`.
fn debye_polys() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for _ in 1..DEBYE_TERMS {
            let u = polys.last().unwrap();
            let mut next = vec![0.0; u.len() + 3];
            // t^2 (1 - t^2) u'(t) / 2
            for (j, &c) in u.iter().enumerate().skip(1) {
                let d = c * j as f64 / 2.0;
                next[j + 1] += d;
                next[j + 3] -= d;
            }
            // (1/8) int_0^t (1 - 5 s^2) u(s) ds
            for (j, &c) in u.iter().enumerate() {
                next[j + 1] += c / (8.0 * (j + 1) as f64);
                next[j + 3] -= 5.0 * c / (8.0 * (j + 3) as f64);
            }
            while next.last() == Some(&0.0) {
                next.pop();
            }
            polys.push(next);
        }
        polys
    })
}

fn poly_eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// `sum_k u_k(t) / nu^k`.
fn debye_sum(nu: f64, t: f64) -> f64 {
    let inv = 1.0 / nu;
    let mut pow = 1.0;
    let mut sum = 0.0;
    for u in debye_polys() {
        sum += poly_eval(u, t) * pow;
        pow *= inv;
    }
    sum
}

fn log_i_uniform(nu: f64, x: f64) -> f64 {
    let s = nu.hypot(x);
    let t = nu / s;
    // nu * eta(x / nu) with eta(z) = sqrt(1 + z^2) + ln(z / (1 + sqrt(1 + z^2)))
    let nu_eta = s + nu * (x / (nu + s)).ln();
    nu_eta - 0.5 * (2.0 * PI * nu).ln() - 0.5 * (s / nu).ln() + debye_sum(nu, t).ln()
}

fn hankel_sum(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (8.0 * k as f64 * x);
        if term.abs() >= last {
            break;
        }
        sum += term;
        last = term.abs();
        if last <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn log_i_hankel(nu: f64, x: f64) -> f64 {
    x - 0.5 * (2.0 * PI * x).ln() + hankel_sum(nu, x).ln()
}

/// Power series `sum_k (x/2)^{2k+nu} / (k! Gamma(nu + k + 1))`, summed
/// outward from its peak term.
fn log_i_series(nu: f64, x: f64) -> f64 {
    let q = x * x / 4.0;
    let peak = ((nu.hypot(x) - nu) / 2.0).round().max(0.0);
    let log_peak = (2.0 * peak + nu) * (x / 2.0).ln()
        - log_gamma(peak + 1.0).expect("positive").ln()
        - log_gamma(nu + peak + 1.0).expect("positive").ln();

    // Tail above the peak, then below it. Summing the small terms separately
    // keeps ln(1 + tail) accurate when the series is dominated by its first term.
    let mut rest = 0.0;
    let mut term = 1.0;
    let mut k = peak;
    loop {
        term *= q / ((k + 1.0) * (nu + k + 1.0));
        rest += term;
        k += 1.0;
        if term <= SERIES_EPS * (1.0 + rest) {
            break;
        }
    }
    term = 1.0;
    k = peak;
    while k > 0.0 {
        term *= k * (nu + k) / q;
        rest += term;
        k -= 1.0;
        if term <= SERIES_EPS * (1.0 + rest) {
            break;
        }
    }
    log_peak + rest.ln_1p()
}

fn check_order_arg(nu: f64, x: f64) -> Result<()> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(domain(format!("Bessel order must be >= 0, got {nu}")));
    }
    if !(x >= 0.0) || x.is_nan() {
        return Err(domain(format!("Bessel argument must be >= 0, got {x}")));
    }
    Ok(())
}

fn log_i_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    if nu >= BESSEL_UNIFORM_MIN_ORDER {
        log_i_uniform(nu, x)
    } else if x < BESSEL_HANKEL_MIN_X {
        log_i_series(nu, x)
    } else {
        log_i_hankel(nu, x)
    }
}

/// `ln I_nu(x)` for `nu >= 0`, `x >= 0`.
///
/// `I_nu(0) = 0` for `nu > 0` is returned as [`LogValue::ZERO`].
pub fn log_bessel_i(nu: f64, x: f64) -> Result<LogValue> {
    check_order_arg(nu, x)?;
    Ok(LogValue(log_i_unchecked(nu, x)))
}

/// Evaluation through a specific regime, for the hand-off continuity tests.
#[doc(hidden)]
pub fn log_bessel_i_regime(nu: f64, x: f64, regime: u8) -> f64 {
    match regime {
        0 => log_i_series(nu, x),
        1 => log_i_hankel(nu, x),
        _ => log_i_uniform(nu, x),
    }
}

// ---------------------------------------------------------------------------
// Ratios

fn ratio_cf(nu: f64, x: f64) -> f64 {
    // I_{nu+1}/I_nu = 1 / (b_1 + 1 / (b_2 + ...)),  b_k = 2 (nu + k) / x
    const TINY: f64 = 1e-300;
    let b = |k: f64| 2.0 * (nu + k) / x;
    let mut f = b(1.0).max(TINY);
    let mut c = f;
    let mut d = 0.0;
    let mut k = 2.0;
    loop {
        let bk = b(k);
        d += bk;
        d = if d == 0.0 { 1.0 / TINY } else { 1.0 / d };
        c = bk + 1.0 / c;
        if c == 0.0 {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 || k > 1e8 {
            break;
        }
        k += 1.0;
    }
    1.0 / f
}

fn log_ratio_uniform(nu: f64, x: f64) -> f64 {
    let mu = nu + 1.0;
    let s_nu = nu.hypot(x);
    let s_mu = mu.hypot(x);
    let ds = (2.0 * nu + 1.0) / (s_mu + s_nu);
    // (mu eta_mu - nu eta_nu)
    let lead = ds + (x / (mu + s_mu)).ln() - nu * ((1.0 + ds) / (nu + s_nu)).ln_1p();
    // -1/2 ln(2 pi mu) - 1/4 ln(1 + z_mu^2) minus the same at nu
    let prefactor = -0.5 * (ds / s_nu).ln_1p();
    let corr = (debye_sum(mu, mu / s_mu) / debye_sum(nu, nu / s_nu)).ln();
    lead + prefactor + corr
}

fn ratio_unchecked(nu: f64, x: f64) -> f64 {
    if nu >= BESSEL_UNIFORM_MIN_ORDER {
        log_ratio_uniform(nu, x).exp()
    } else if x < BESSEL_HANKEL_MIN_X {
        ratio_cf(nu, x)
    } else {
        hankel_sum(nu + 1.0, x) / hankel_sum(nu, x)
    }
}

/// `I_{nu+1}(x) / I_nu(x)`, which lies in `(0, 1)` for `x > 0`.
pub fn bessel_ratio_consecutive(nu: f64, x: f64) -> Result<f64> {
    check_order_arg(nu, x)?;
    if !(x > 0.0) {
        return Err(domain("consecutive Bessel ratio needs x > 0"));
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    Ok(ratio_unchecked(nu, x))
}

// 16-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = 16;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp;
            loop {
                let (mut p0, mut p1) = (1.0, z);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            rule.push((z, 2.0 / ((1.0 - z * z) * dp * dp)));
        }
        rule
    })
}

/// `int_a^b I_{nu+1}(t)/I_nu(t) dt` for `0 <= a <= b`, on panels whose width
/// stays below the distance to the ratio's nearest complex pole.
fn integrate_ratio(nu: f64, a: f64, b: f64) -> f64 {
    let rule = gauss_legendre();
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let h = (b - lo).min((0.5 * lo).max(1.0));
        let hi = if b - lo <= h { b } else { lo + h };
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let panel: f64 = rule
            .iter()
            .map(|&(z, w)| w * ratio_unchecked(nu, mid + half * z))
            .sum();
        total += half * panel;
        lo = hi;
    }
    total
}

/// `ln(I_nu(factor * x) / I_nu(x)) - nu * ln(factor)`.
///
/// The `nu ln(factor)` term cancels the leading power of the series, so the
/// result stays well conditioned for large orders and for factors near 1.
/// At `x = 0` this is the analytic limit, 0.
pub fn log_bessel_ratio_scaled(nu: f64, factor: f64, x: f64) -> Result<f64> {
    check_order_arg(nu, x)?;
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(domain(format!(
            "ratio factor must be positive, got {factor}"
        )));
    }
    if x == 0.0 || factor == 1.0 {
        return Ok(0.0);
    }
    let y = factor * x;
    if !y.is_finite() {
        return Err(domain("scaled Bessel argument overflows"));
    }
    if nu >= BESSEL_UNIFORM_MIN_ORDER {
        // Same expansion at two arguments, leading terms differenced exactly.
        let s0 = nu.hypot(x);
        let s1 = nu.hypot(y);
        let ds = (y - x) * (y + x) / (s1 + s0);
        let lead = ds - nu * (ds / (nu + s0)).ln_1p();
        let prefactor = -0.5 * (ds / s0).ln_1p();
        let corr = (debye_sum(nu, nu / s1) / debye_sum(nu, nu / s0)).ln();
        return Ok(lead + prefactor + corr);
    }
    // d/dt ln I_nu(t) = I_{nu+1}(t)/I_nu(t) + nu/t
    if factor > 1.0 {
        Ok(integrate_ratio(nu, x, y))
    } else {
        Ok(-integrate_ratio(nu, y, x))
    }
}

/// `ln(I_nu(x_num) / I_nu(x_den))`.
///
/// `x_den = 0` with `x_num > 0` and `nu > 0` diverges and is reported as
/// [`Error::IndeterminateRatio`]; so is `0/0` for `nu > 0`, whose limit depends
/// on how the arguments approach zero (see [`log_bessel_ratio_scaled`]).
pub fn log_bessel_ratio(nu: f64, x_num: f64, x_den: f64) -> Result<LogValue> {
    check_order_arg(nu, x_num)?;
    check_order_arg(nu, x_den)?;
    if x_num == x_den {
        if x_num == 0.0 && nu > 0.0 {
            return Err(Error::IndeterminateRatio(
                "0/0; use log_bessel_ratio_scaled for the limit".into(),
            ));
        }
        return Ok(LogValue(0.0));
    }
    if x_den == 0.0 {
        if nu > 0.0 {
            return Err(Error::IndeterminateRatio(format!(
                "I_{nu}({x_num}) / I_{nu}(0) diverges"
            )));
        }
        return Ok(LogValue(log_i_unchecked(0.0, x_num)));
    }
    if x_num == 0.0 {
        return Ok(LogValue(
            log_i_unchecked(nu, 0.0) - log_i_unchecked(nu, x_den),
        ));
    }
    let factor = x_num / x_den;
    Ok(LogValue(
        log_bessel_ratio_scaled(nu, factor, x_den)? + nu * factor.ln(),
    ))
}
