//! Conversions between RDP curves and `(epsilon, delta)` guarantees.
//!
//! For an `(alpha, tau)`-RDP mechanism and any `epsilon`,
//!
//! ```text
//! delta_alpha = exp((alpha-1)(tau - epsilon)) / (alpha-1) * (1 - 1/alpha)^alpha
//! ```
//!
//! is a valid `delta`; both directions minimise this family over the order.
//! The search evaluates a log-spaced grid in `alpha - 1`, picks the best grid
//! point by index, then refines by golden-section search between its
//! neighbours. Nothing assumes convexity in `alpha`.

use crate::error::{domain, Error, Result};
use crate::rdp::{RdpBound, VmfParams};
use crate::specfn::bessel_ratio_consecutive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const ORDER_MIN_EXCESS: f64 = 1e-6;
pub const ORDER_MAX: f64 = 1e6;
pub const ORDER_GRID_POINTS: usize = 2000;

const GOLDEN_ITERS: usize = 80;

/// An `(epsilon, delta)`-DP guarantee and the order that certifies it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpGuarantee {
    pub epsilon: f64,
    pub delta: f64,
    /// `ln delta`; finite even when `delta` underflows.
    pub log_delta: f64,
    /// `None` when no order is needed (zero curve, infinite epsilon).
    pub alpha_star: Option<f64>,
}

/// Orders `alpha = 1 + 10^u` with `u` evenly spaced.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderGrid {
    alphas: Vec<f64>,
}

impl OrderGrid {
    pub fn log_spaced(min_excess: f64, max_alpha: f64, points: usize) -> Result<Self> {
        if !(min_excess > 0.0) || !(max_alpha > 1.0 + min_excess) || points < 2 {
            return Err(domain(
                "order grid needs 0 < min_excess < max_alpha - 1 and >= 2 points",
            ));
        }
        let lo = min_excess.log10();
        let hi = (max_alpha - 1.0).log10();
        let step = (hi - lo) / (points - 1) as f64;
        let alphas = (0..points)
            .map(|i| 1.0 + 10f64.powf(lo + step * i as f64))
            .collect();
        Ok(OrderGrid { alphas })
    }

    /// `(1 + 1e-6, 1e6]`, 2000 points.
    pub fn standard() -> Self {
        Self::log_spaced(ORDER_MIN_EXCESS, ORDER_MAX, ORDER_GRID_POINTS).expect("valid grid")
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

impl Default for OrderGrid {
    fn default() -> Self {
        Self::standard()
    }
}

fn log_delta_at(alpha: f64, tau: f64, epsilon: f64) -> f64 {
    let am1 = alpha - 1.0;
    am1 * (tau - epsilon) - am1.ln() + alpha * (-1.0 / alpha).ln_1p()
}

fn epsilon_at(alpha: f64, tau: f64, log_delta: f64) -> f64 {
    let am1 = alpha - 1.0;
    alpha / am1 * (-1.0 / alpha).ln_1p() + tau - (am1.ln() + log_delta) / am1
}

/// A curve with its values cached on an order grid, reusable across many
/// conversions of the same curve.
pub struct OrderSearch<'a, C: RdpBound + ?Sized> {
    curve: &'a C,
    alphas: Vec<f64>,
    taus: Vec<f64>,
}

impl<'a, C: RdpBound + ?Sized> OrderSearch<'a, C> {
    pub fn new(curve: &'a C, grid: &OrderGrid) -> Self {
        let max = curve.max_order();
        let mut alphas: Vec<f64> = grid
            .alphas()
            .iter()
            .copied()
            .filter(|&a| a <= max)
            .collect();
        if max.is_finite() && alphas.last().is_none_or(|&a| a < max) {
            alphas.push(max);
        }
        let taus = alphas.par_iter().map(|&a| curve.tau(a)).collect();
        OrderSearch {
            curve,
            alphas,
            taus,
        }
    }

    pub fn curve(&self) -> &C {
        self.curve
    }

    /// Minimise `objective(alpha, tau(alpha))`; returns `(value, alpha)`.
    fn minimise<F>(&self, objective: F) -> Option<(f64, f64)>
    where
        F: Fn(f64, f64) -> f64,
    {
        let mut best: Option<(f64, usize)> = None;
        for (i, (&a, &t)) in self.alphas.iter().zip(&self.taus).enumerate() {
            if !t.is_finite() {
                continue;
            }
            let v = objective(a, t);
            if v.is_nan() {
                continue;
            }
            if best.is_none_or(|(bv, _)| v < bv) {
                best = Some((v, i));
            }
        }
        let (value, idx) = best?;
        if value == f64::NEG_INFINITY {
            return Some((value, self.alphas[idx]));
        }
        let lo = self.alphas[idx.saturating_sub(1)];
        let hi = self.alphas[(idx + 1).min(self.alphas.len() - 1)];
        let (rv, ra) = self.golden(lo, hi, &objective);
        if rv < value {
            Some((rv, ra))
        } else {
            Some((value, self.alphas[idx]))
        }
    }

    fn golden<F>(&self, lo: f64, hi: f64, objective: &F) -> (f64, f64)
    where
        F: Fn(f64, f64) -> f64,
    {
        let f = |u: f64| {
            let a = 1.0 + u.exp();
            let v = objective(a, self.curve.tau(a));
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = ((lo - 1.0).ln(), (hi - 1.0).ln());
        if !(b > a) {
            let v = f(a);
            return (v, 1.0 + a.exp());
        }
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..GOLDEN_ITERS {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = f(d);
            }
        }
        if fc <= fd {
            (fc, 1.0 + c.exp())
        } else {
            (fd, 1.0 + d.exp())
        }
    }

    /// Smallest `delta` for the given `epsilon`.
    pub fn delta_given_epsilon(&self, epsilon: f64) -> Result<DpGuarantee> {
        if !(epsilon >= 0.0) {
            return Err(domain(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if self.curve.is_zero() || epsilon == f64::INFINITY {
            return Ok(DpGuarantee {
                epsilon,
                delta: 0.0,
                log_delta: f64::NEG_INFINITY,
                alpha_star: None,
            });
        }
        let (log_delta, alpha) = self
            .minimise(|a, t| log_delta_at(a, t, epsilon))
            .ok_or_else(|| Error::Optimisation("no finite RDP value on the order grid".into()))?;
        let log_delta = log_delta.min(0.0);
        Ok(DpGuarantee {
            epsilon,
            delta: log_delta.exp(),
            log_delta,
            alpha_star: Some(alpha),
        })
    }

    /// Smallest `epsilon` for the given `delta`, floored at 0.
    pub fn epsilon_given_delta(&self, delta: f64) -> Result<DpGuarantee> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        self.epsilon_given_log_delta(delta.ln())
    }

    pub fn epsilon_given_log_delta(&self, log_delta: f64) -> Result<DpGuarantee> {
        if !(log_delta < 0.0) {
            return Err(domain(format!("ln delta must be < 0, got {log_delta}")));
        }
        let delta = log_delta.exp();
        if self.curve.is_zero() {
            return Ok(DpGuarantee {
                epsilon: 0.0,
                delta,
                log_delta,
                alpha_star: None,
            });
        }
        let (epsilon, alpha) = self
            .minimise(|a, t| epsilon_at(a, t, log_delta))
            .ok_or_else(|| Error::Optimisation("no finite RDP value on the order grid".into()))?;
        Ok(DpGuarantee {
            epsilon: epsilon.max(0.0),
            delta,
            log_delta,
            alpha_star: Some(alpha),
        })
    }
}

/// `inf_alpha delta_alpha` for the given epsilon, with the default order grid.
pub fn delta_given_epsilon<C: RdpBound + ?Sized>(curve: &C, epsilon: f64) -> Result<DpGuarantee> {
    OrderSearch::new(curve, &OrderGrid::standard()).delta_given_epsilon(epsilon)
}

/// `inf_alpha epsilon_alpha` for the given delta, with the default order grid.
pub fn epsilon_given_delta<C: RdpBound + ?Sized>(curve: &C, delta: f64) -> Result<DpGuarantee> {
    OrderSearch::new(curve, &OrderGrid::standard()).epsilon_given_delta(delta)
}

/// Left-hand side of the VMF stationarity condition
/// `-eps + 2k I_{nu+1}((2a-1)k) / I_nu((2a-1)k) + ln(1 - 1/a)`.
pub fn vmf_order_condition(params: &VmfParams, epsilon: f64, alpha: f64) -> Result<f64> {
    let kappa = params.kappa();
    let r = bessel_ratio_consecutive(params.nu(), (2.0 * alpha - 1.0) * kappa)?;
    Ok(-epsilon + 2.0 * kappa * r + (-1.0 / alpha).ln_1p())
}

/// Order minimising `delta_alpha` for the VMF curve, by bisection on the
/// stationarity condition over `(1, ORDER_MAX]`.
///
/// The condition is increasing in `alpha`; when it is still negative at
/// `ORDER_MAX` (always the case for `epsilon >= 2 kappa`) this returns
/// [`Error::NoRoot`] and the caller should fall back to grid search.
pub fn vmf_optimal_alpha(params: &VmfParams, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(params.kappa() > 0.0) {
        return Err(domain("optimal order needs kappa > 0"));
    }
    let g = |a: f64| vmf_order_condition(params, epsilon, a);
    if g(ORDER_MAX)? <= 0.0 {
        return Err(Error::NoRoot {
            alpha_max: ORDER_MAX,
        });
    }
    // bisect on ln(alpha - 1)
    let (mut lo, mut hi) = ((f64::EPSILON * 16.0).ln(), (ORDER_MAX - 1.0).ln());
    let mut best = (f64::INFINITY, ORDER_MAX);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let alpha = 1.0 + mid.exp();
        let v = g(alpha)?;
        if v.abs() < best.0 {
            best = (v.abs(), alpha);
        }
        if v.abs() <= 1e-13 || hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.1)
}

/// `delta` for a VMF curve using the bisection order, falling back to the
/// grid when the condition has no root.
pub fn vmf_delta_given_epsilon(params: &VmfParams, epsilon: f64) -> Result<DpGuarantee> {
    let curve = crate::rdp::RdpCurve::Vmf(*params);
    if params.kappa() == 0.0 {
        return delta_given_epsilon(&curve, epsilon);
    }
    match vmf_optimal_alpha(params, epsilon) {
        Ok(alpha) => {
            let log_delta = log_delta_at(alpha, curve.tau(alpha), epsilon).min(0.0);
            Ok(DpGuarantee {
                epsilon,
                delta: log_delta.exp(),
                log_delta,
                alpha_star: Some(alpha),
            })
        }
        Err(Error::NoRoot { .. }) => delta_given_epsilon(&curve, epsilon),
        Err(e) => Err(e),
    }
}
