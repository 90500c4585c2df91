//! RDP-domain subsampling bound for a generic mechanism, and composition.

use super::ZhuPrefactor;
use crate::error::{domain, Result};
use crate::rdp::{RdpBound, RdpCurve, TabulatedCurve};
use crate::specfn::{log_binomial, log_sum_exp};

// k * ln(x), with 0 * ln(0) = 0
fn scaled_log(k: f64, log_x: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * log_x
    }
}

/// Poisson-subsampling bound at an integer order `alpha >= 2`:
///
/// ```text
/// ln{ (1-g)^(a-1) (a g - g + 1) + C(a,2) g^2 (1-g)^(a-2) e^tau(2)
///     + 3 sum_{l=3}^{a} C(a,l) (1-g)^(a-l) g^l e^((l-1) tau(l)) }
/// ```
///
/// times the prefactor. `tau_at(l)` supplies the base curve at integer `l`.
pub fn subsampled_rdp_with<F>(
    tau_at: F,
    gamma: f64,
    alpha: u64,
    prefactor: ZhuPrefactor,
) -> Result<f64>
where
    F: Fn(u64) -> f64,
{
    if alpha < 2 {
        return Err(domain(format!(
            "subsampling bound needs integer alpha >= 2, got {alpha}"
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(domain(format!(
            "sampling rate must lie in [0, 1], got {gamma}"
        )));
    }
    let a = alpha as f64;
    let (lg, l1g) = (gamma.ln(), (-gamma).ln_1p());
    let mut terms = Vec::with_capacity(alpha as usize);
    terms.push(scaled_log(a - 1.0, l1g) + (a * gamma - gamma + 1.0).ln());
    terms.push(log_binomial(a, 2.0)? + scaled_log(2.0, lg) + scaled_log(a - 2.0, l1g) + tau_at(2));
    for l in 3..=alpha {
        let lf = l as f64;
        terms.push(
            3f64.ln()
                + log_binomial(a, lf)?
                + scaled_log(a - lf, l1g)
                + scaled_log(lf, lg)
                + (lf - 1.0) * tau_at(l),
        );
    }
    let v = log_sum_exp(&terms);
    if v.is_nan() {
        return Ok(f64::INFINITY);
    }
    Ok(match prefactor {
        ZhuPrefactor::Orig => v / (a - 1.0),
        ZhuPrefactor::Paper => v / a,
    }
    .max(0.0))
}

/// [`subsampled_rdp_with`] for a curve.
pub fn subsampled_rdp<C: RdpBound + ?Sized>(
    curve: &C,
    gamma: f64,
    alpha: u64,
    prefactor: ZhuPrefactor,
) -> Result<f64> {
    subsampled_rdp_with(|l| curve.tau(l as f64), gamma, alpha, prefactor)
}

/// Subsampled curve tabulated at orders `1..=max_order`, with the convexity
/// bound `gamma tau(1)` at order 1 and linear interpolation in between.
pub fn subsampled_curve<C: RdpBound + ?Sized>(
    curve: &C,
    gamma: f64,
    max_order: u64,
    prefactor: ZhuPrefactor,
) -> Result<TabulatedCurve> {
    if max_order < 2 {
        return Err(domain("subsampled curve needs max_order >= 2"));
    }
    let base: Vec<f64> = (1..=max_order).map(|l| curve.tau(l as f64)).collect();
    subsampled_from_table(&base, gamma, prefactor)
}

/// As [`subsampled_curve`], from base values `base[i] = tau(i + 1)`.
pub fn subsampled_from_table(
    base: &[f64],
    gamma: f64,
    prefactor: ZhuPrefactor,
) -> Result<TabulatedCurve> {
    let mut values = Vec::with_capacity(base.len());
    values.push(gamma * base[0]);
    for a in 2..=base.len() as u64 {
        values.push(subsampled_rdp_with(
            |l| base[l as usize - 1],
            gamma,
            a,
            prefactor,
        )?);
    }
    TabulatedCurve::new(values)
}

/// `times`-fold composition: `tau'(alpha) = times * tau_s(alpha)`.
pub fn compose_rdp(curve: RdpCurve, times: u64) -> Result<RdpCurve> {
    if times == 0 {
        return Err(domain("composition count must be >= 1"));
    }
    if times == 1 {
        return Ok(curve);
    }
    Ok(RdpCurve::Composed {
        times: times as f64,
        inner: Box::new(curve),
    })
}
