use super::LogValue;
use crate::error::{domain, Result};

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k-1)) for k = 1..=8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

const STIRLING_MIN: f64 = 15.0;

/// `ln Gamma(x)` for `x > 0`.
///
/// Stirling's series for `x >= 15`; smaller arguments are shifted up with the
/// recurrence `Gamma(x + 1) = x Gamma(x)`.
pub fn log_gamma(x: f64) -> Result<LogValue> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("log_gamma needs x > 0, got {x}")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(LogValue(0.0));
    }
    if x >= STIRLING_MIN {
        return Ok(LogValue(stirling(x)));
    }
    let shift = (STIRLING_MIN - x).ceil();
    let mut prod = 1.0;
    let mut z = x;
    while z < STIRLING_MIN {
        prod *= z;
        z += 1.0;
    }
    debug_assert!((z - (x + shift)).abs() < 1e-9);
    Ok(LogValue(stirling(z) - prod.ln()))
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        series += c * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + series
}

/// `ln C(n, k)` for real `n >= k >= 0`.
pub fn log_binomial(n: f64, k: f64) -> Result<f64> {
    if !(k >= 0.0) || !(n >= k) {
        return Err(domain(format!(
            "log_binomial needs n >= k >= 0, got ({n}, {k})"
        )));
    }
    if k == 0.0 || k == n {
        return Ok(0.0);
    }
    Ok(log_gamma(n + 1.0)?.ln() - log_gamma(k + 1.0)?.ln() - log_gamma(n - k + 1.0)?.ln())
}
