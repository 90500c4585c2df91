//! `(epsilon, delta)`-domain amplification and advanced composition.

use super::KairouzVariant;
use crate::error::{domain, Result};
use crate::specfn::log_sum_exp;

/// Poisson subsampling: `eps_s = ln(1 + gamma (e^eps - 1))`, `delta_s = gamma delta`.
pub fn amplify_dp_by_subsampling(epsilon: f64, delta: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(epsilon >= 0.0) {
        return Err(domain(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(domain(format!("delta must lie in [0, 1), got {delta}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(domain(format!(
            "sampling rate must lie in (0, 1], got {gamma}"
        )));
    }
    let eps_s = if gamma == 1.0 {
        epsilon
    } else if epsilon < 1.0 {
        (gamma * epsilon.exp_m1()).ln_1p()
    } else {
        log_sum_exp(&[(-gamma).ln_1p(), gamma.ln() + epsilon])
    };
    Ok((eps_s.min(epsilon), gamma * delta))
}

/// Result of `N`-fold advanced composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Composed {
    pub epsilon: f64,
    pub delta: f64,
    /// Index of the minimising branch (0: `N eps_s`, 1 and 2: the two
    /// concentration bounds).
    pub branch: usize,
}

/// `delta_total = 1 - (1 - delta_s)^N (1 - delta_tilde)`.
pub fn composed_delta(delta_s: f64, n: f64, delta_tilde: f64) -> f64 {
    -(n * (-delta_s).ln_1p() + (-delta_tilde).ln_1p()).exp_m1()
}

/// Advanced composition of `n` `(eps_s, delta_s)` mechanisms with slack
/// `delta_tilde`.
///
/// [`KairouzVariant::Orig`] multiplies the `tanh(eps_s / 2)` term by
/// `n eps_s`; [`KairouzVariant::Paper`] does not.
pub fn compose_dp(
    eps_s: f64,
    delta_s: f64,
    n: f64,
    delta_tilde: f64,
    variant: KairouzVariant,
) -> Result<Composed> {
    if !(eps_s >= 0.0) {
        return Err(domain(format!("eps_s must be >= 0, got {eps_s}")));
    }
    if !(0.0..1.0).contains(&delta_s) {
        return Err(domain(format!("delta_s must lie in [0, 1), got {delta_s}")));
    }
    if !(delta_tilde > 0.0 && delta_tilde < 1.0) {
        return Err(domain(format!(
            "delta_tilde must lie in (0, 1), got {delta_tilde}"
        )));
    }
    if !(n >= 1.0) {
        return Err(domain(format!("composition count must be >= 1, got {n}")));
    }
    let lead = match variant {
        KairouzVariant::Orig => n * eps_s * (eps_s / 2.0).tanh(),
        KairouzVariant::Paper => (eps_s / 2.0).tanh(),
    };
    let branches = [
        n * eps_s,
        lead + eps_s
            * (2.0 * n * (std::f64::consts::E + (n * eps_s * eps_s).sqrt() / delta_tilde).ln())
                .sqrt(),
        lead + eps_s * (2.0 * n * (1.0 / delta_tilde).ln()).sqrt(),
    ];
    let (branch, epsilon) =
        branches
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    Ok(Composed {
        epsilon,
        delta: composed_delta(delta_s, n, delta_tilde),
        branch,
    })
}
