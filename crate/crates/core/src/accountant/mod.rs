//! Privacy accounting for subsampled, composed DP-SGD.
//!
//! Two pipelines are run and the smaller epsilon wins:
//!
//! 1. convert the per-step RDP curve to `(eps, delta)`, amplify by
//!    subsampling in the DP domain, then apply advanced composition;
//! 2. amplify and compose in the RDP domain, converting only at the end.

mod composition;
mod sampled_gaussian;
mod subsampled;

pub use composition::{amplify_dp_by_subsampling, compose_dp, composed_delta, Composed};
pub use sampled_gaussian::{SampledGaussian, DEFAULT_MAX_ORDER as SAMPLED_GAUSSIAN_MAX_ORDER};
pub use subsampled::{
    compose_rdp, subsampled_curve, subsampled_from_table, subsampled_rdp, subsampled_rdp_with,
};

use crate::dpconvert::{OrderGrid, OrderSearch};
use crate::error::{domain, Error, Result};
use crate::rdp::{MechanismSpec, RdpBound, RdpCurve};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const BASE_EPSILON_MIN: f64 = 1e-4;
pub const BASE_EPSILON_MAX: f64 = 1e3;
pub const BASE_EPSILON_POINTS: usize = 400;
pub const DELTA_TILDE_POINTS: usize = 100;
pub const INITIAL_MAX_ORDER: u64 = 512;
pub const MAX_ORDER_CAP: u64 = 8192;

macro_rules! two_way_enum {
    ($(#[$m:meta])* $name:ident { $a:ident => $sa:literal, $b:ident => $sb:literal }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
        pub enum $name {
            #[default]
            #[serde(rename = $sa)]
            $a,
            #[serde(rename = $sb)]
            $b,
        }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $name::$a => $sa,
                    $name::$b => $sb,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $sa => Ok($name::$a),
                    $sb => Ok($name::$b),
                    _ => Err(domain(format!(
                        "expected {} or {}, got {s:?}",
                        $sa, $sb
                    ))),
                }
            }
        }
    };
}

two_way_enum!(
    /// Prefactor of the subsampling bound: `1/(alpha-1)` as originally
    /// proved, or `1/alpha` as sometimes restated.
    ZhuPrefactor { Orig => "orig", Paper => "paper" }
);
two_way_enum!(
    /// Whether the `tanh(eps_s/2)` term of advanced composition carries the
    /// `N eps_s` factor (`orig`) or not (`paper`).
    KairouzVariant { Orig => "orig", Paper => "paper" }
);
two_way_enum!(
    /// RDP-domain subsampling of the Gaussian: the exact mixture divergence,
    /// or the generic bound used for every other mechanism.
    GaussianSubsampling { Exact => "exact", Zhu => "zhu" }
);
two_way_enum!(
    /// How an epoch count becomes a number of compositions: literally, or as
    /// `ceil(N / gamma)` batch steps.
    EpochRule { Literal => "literal", Steps => "steps" }
);

/// How many times the per-batch mechanism runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositionCount {
    Epochs(u64),
    Steps(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccountingScenario {
    gamma: f64,
    count: CompositionCount,
    delta_target: f64,
}

impl AccountingScenario {
    pub fn new(gamma: f64, count: CompositionCount, delta_target: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(domain(format!(
                "sampling rate must lie in (0, 1], got {gamma}"
            )));
        }
        let n = match count {
            CompositionCount::Epochs(n) | CompositionCount::Steps(n) => n,
        };
        if n == 0 {
            return Err(domain("composition count must be >= 1"));
        }
        if !(delta_target > 0.0 && delta_target < 1.0) {
            return Err(domain(format!(
                "target delta must lie in (0, 1), got {delta_target}"
            )));
        }
        Ok(AccountingScenario {
            gamma,
            count,
            delta_target,
        })
    }

    pub fn epochs(gamma: f64, epochs: u64, delta_target: f64) -> Result<Self> {
        Self::new(gamma, CompositionCount::Epochs(epochs), delta_target)
    }

    pub fn steps(gamma: f64, steps: u64, delta_target: f64) -> Result<Self> {
        Self::new(gamma, CompositionCount::Steps(steps), delta_target)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn count(&self) -> CompositionCount {
        self.count
    }

    pub fn delta_target(&self) -> f64 {
        self.delta_target
    }

    /// Number of compositions under `rule`; explicit step counts ignore it.
    pub fn compositions(&self, rule: EpochRule) -> u64 {
        match (self.count, rule) {
            (CompositionCount::Steps(n), _) => n,
            (CompositionCount::Epochs(n), EpochRule::Literal) => n,
            (CompositionCount::Epochs(n), EpochRule::Steps) => steps_for_epochs(n, self.gamma),
        }
    }
}

/// `ceil(epochs / gamma)`, snapping values within 1e-9 of an integer.
pub fn steps_for_epochs(epochs: u64, gamma: f64) -> u64 {
    let x = epochs as f64 / gamma;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Formula variants. The defaults reproduce the reference accounting tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AccountOptions {
    pub zhu: ZhuPrefactor,
    pub kairouz: KairouzVariant,
    pub gaussian: GaussianSubsampling,
    /// `None` picks per mechanism: literal epochs for VMF, batch steps for
    /// the Gaussian.
    pub epoch_rule: Option<EpochRule>,
}

impl AccountOptions {
    pub fn epoch_rule_for(&self, mechanism: &MechanismSpec) -> EpochRule {
        self.epoch_rule.unwrap_or(if mechanism.is_gaussian() {
            EpochRule::Steps
        } else {
            EpochRule::Literal
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Approach1,
    Approach2,
}

impl Approach {
    pub fn as_str(self) -> &'static str {
        match self {
            Approach::Approach1 => "approach1",
            Approach::Approach2 => "approach2",
        }
    }
}

/// The best triple found by the DP-domain pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approach1Detail {
    pub epsilon: f64,
    pub base_epsilon: f64,
    pub base_delta: f64,
    pub alpha_star: Option<f64>,
    pub epsilon_s: f64,
    pub delta_s: f64,
    pub delta_tilde: f64,
    pub delta_total: f64,
    pub compositions: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approach2Detail {
    pub epsilon: f64,
    pub alpha_star: Option<f64>,
    pub max_order: f64,
    pub compositions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountingResult {
    pub epsilon_approach1: f64,
    pub epsilon_approach2: f64,
    pub epsilon_best: f64,
    pub winner: Approach,
    pub approach1: Option<Approach1Detail>,
    pub approach2: Option<Approach2Detail>,
    pub options: AccountOptions,
}

impl AccountingResult {
    pub fn alpha_star(&self) -> Option<f64> {
        match self.winner {
            Approach::Approach1 => self.approach1.and_then(|d| d.alpha_star),
            Approach::Approach2 => self.approach2.and_then(|d| d.alpha_star),
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

struct DpPipeline<'a> {
    search: OrderSearch<'a, RdpCurve>,
    gamma: f64,
    n: f64,
    delta_target: f64,
    delta_tildes: Vec<f64>,
    kairouz: KairouzVariant,
}

impl DpPipeline<'_> {
    fn evaluate(&self, base_epsilon: f64) -> Option<Approach1Detail> {
        let g = self.search.delta_given_epsilon(base_epsilon).ok()?;
        if g.delta >= 1.0 {
            return None;
        }
        let (eps_s, delta_s) = amplify_dp_by_subsampling(base_epsilon, g.delta, self.gamma).ok()?;
        // largest slack that still meets the target
        let exact = -((-self.delta_target).ln_1p() - self.n * (-delta_s).ln_1p()).exp_m1();
        let mut best: Option<Approach1Detail> = None;
        for &dt in self.delta_tildes.iter().chain(std::iter::once(&exact)) {
            if !(dt > 0.0 && dt < 1.0) {
                continue;
            }
            let Ok(c) = compose_dp(eps_s, delta_s, self.n, dt, self.kairouz) else {
                continue;
            };
            if c.delta > self.delta_target {
                continue;
            }
            if best.is_none_or(|b| c.epsilon < b.epsilon) {
                best = Some(Approach1Detail {
                    epsilon: c.epsilon,
                    base_epsilon,
                    base_delta: g.delta,
                    alpha_star: g.alpha_star,
                    epsilon_s: eps_s,
                    delta_s,
                    delta_tilde: dt,
                    delta_total: c.delta,
                    compositions: self.n as u64,
                });
            }
        }
        best
    }
}

fn zero_detail1(n: u64) -> Approach1Detail {
    Approach1Detail {
        epsilon: 0.0,
        base_epsilon: 0.0,
        base_delta: 0.0,
        alpha_star: None,
        epsilon_s: 0.0,
        delta_s: 0.0,
        delta_tilde: 0.0,
        delta_total: 0.0,
        compositions: n,
    }
}

/// DP-domain pipeline. `Ok(None)` means no grid point certifies the target.
pub fn approach1(
    mechanism: &MechanismSpec,
    scenario: &AccountingScenario,
    options: &AccountOptions,
) -> Result<Option<Approach1Detail>> {
    let curve = mechanism.curve()?;
    let n = scenario.compositions(options.epoch_rule_for(mechanism));
    if curve.is_zero() {
        return Ok(Some(zero_detail1(n)));
    }
    let pipeline = DpPipeline {
        search: OrderSearch::new(&curve, &OrderGrid::standard()),
        gamma: scenario.gamma,
        n: n as f64,
        delta_target: scenario.delta_target,
        delta_tildes: log_grid(
            scenario.delta_target / 100.0,
            scenario.delta_target,
            DELTA_TILDE_POINTS,
        ),
        kairouz: options.kairouz,
    };
    let grid = log_grid(BASE_EPSILON_MIN, BASE_EPSILON_MAX, BASE_EPSILON_POINTS);
    let evaluated: Vec<Option<Approach1Detail>> =
        grid.par_iter().map(|&e| pipeline.evaluate(e)).collect();
    let mut best: Option<(usize, Approach1Detail)> = None;
    for (i, d) in evaluated.iter().enumerate() {
        if let Some(d) = d {
            if best.is_none_or(|(_, b)| d.epsilon < b.epsilon) {
                best = Some((i, *d));
            }
        }
    }
    let Some((idx, mut detail)) = best else {
        return Ok(None);
    };
    // golden-section refinement of the base epsilon between grid neighbours
    let lo = grid[idx.saturating_sub(1)].ln();
    let hi = grid[(idx + 1).min(grid.len() - 1)].ln();
    let f = |u: f64| pipeline.evaluate(u.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let score = |d: &Option<Approach1Detail>| d.map_or(f64::INFINITY, |d| d.epsilon);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        for cand in [fc, fd].into_iter().flatten() {
            if cand.epsilon < detail.epsilon {
                detail = cand;
            }
        }
        if score(&fc) <= score(&fd) {
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
    Ok(Some(detail))
}

fn rdp_table(curve: &RdpCurve, max_order: u64) -> Vec<f64> {
    (1..=max_order)
        .into_par_iter()
        .map(|l| curve.tau(l as f64))
        .collect()
}

/// The subsampled, composed RDP curve used by the RDP-domain pipeline.
pub fn composed_curve(
    mechanism: &MechanismSpec,
    scenario: &AccountingScenario,
    options: &AccountOptions,
    max_order: u64,
) -> Result<RdpCurve> {
    let n = scenario.compositions(options.epoch_rule_for(mechanism));
    let per_step = match (mechanism, options.gaussian) {
        (MechanismSpec::Gauss { sigma, .. }, GaussianSubsampling::Exact) => {
            RdpCurve::SampledGaussian(SampledGaussian::with_max_order(
                *sigma,
                scenario.gamma,
                max_order as f64,
            )?)
        }
        _ => {
            let base = rdp_table(&mechanism.curve()?, max_order);
            RdpCurve::Tabulated(subsampled_from_table(&base, scenario.gamma, options.zhu)?)
        }
    };
    compose_rdp(per_step, n)
}

/// RDP-domain pipeline. The maximum integer order starts at 512 and doubles
/// while the optimum sits in the upper half of the range and keeps improving.
pub fn approach2(
    mechanism: &MechanismSpec,
    scenario: &AccountingScenario,
    options: &AccountOptions,
) -> Result<Option<Approach2Detail>> {
    let n = scenario.compositions(options.epoch_rule_for(mechanism));
    if mechanism.curve()?.is_zero() {
        return Ok(Some(Approach2Detail {
            epsilon: 0.0,
            alpha_star: None,
            max_order: INITIAL_MAX_ORDER as f64,
            compositions: n,
        }));
    }
    let grid = OrderGrid::standard();
    let run = |max_order: u64| -> Result<Option<Approach2Detail>> {
        let curve = composed_curve(mechanism, scenario, options, max_order)?;
        match OrderSearch::new(&curve, &grid).epsilon_given_delta(scenario.delta_target) {
            Ok(g) if g.epsilon.is_finite() => Ok(Some(Approach2Detail {
                epsilon: g.epsilon,
                alpha_star: g.alpha_star,
                max_order: max_order as f64,
                compositions: n,
            })),
            Ok(_) | Err(Error::Optimisation(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut max_order = INITIAL_MAX_ORDER;
    let mut best = run(max_order)?;
    while max_order < MAX_ORDER_CAP {
        let near_cap = best
            .and_then(|d| d.alpha_star)
            .is_some_and(|a| a > max_order as f64 / 2.0);
        if !near_cap {
            break;
        }
        max_order *= 2;
        match run(max_order)? {
            Some(next) if best.is_none_or(|b| next.epsilon < b.epsilon) => best = Some(next),
            _ => break,
        }
    }
    Ok(best)
}

/// Runs both pipelines; ties go to the first.
pub fn best_epsilon(
    mechanism: &MechanismSpec,
    scenario: &AccountingScenario,
    options: &AccountOptions,
) -> Result<AccountingResult> {
    let (a1, a2) = rayon::join(
        || approach1(mechanism, scenario, options),
        || approach2(mechanism, scenario, options),
    );
    let (a1, a2) = (a1?, a2?);
    let e1 = a1.map_or(f64::INFINITY, |d| d.epsilon);
    let e2 = a2.map_or(f64::INFINITY, |d| d.epsilon);
    let winner = if e2 < e1 {
        Approach::Approach2
    } else {
        Approach::Approach1
    };
    Ok(AccountingResult {
        epsilon_approach1: e1,
        epsilon_approach2: e2,
        epsilon_best: e1.min(e2),
        winner,
        approach1: a1,
        approach2: a2,
        options: *options,
    })
}
