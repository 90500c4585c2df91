//! Quantitative information flow: Bayes vulnerability and Bayes' capacity of
//! discrete channels, and closed-form capacities of the Gaussian and VMF
//! gradient channels.

use crate::error::{domain, Error, Result};
use crate::rdp::MechanismSpec;
use crate::specfn::{
    log_ball_volume, log_bessel_i, log_binomial, log_gamma, log_sphere_area, log_sum_exp,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

const STOCHASTIC_TOL: f64 = 1e-9;
pub const SAFETY_TOL: f64 = 1e-9;

/// A row-stochastic matrix: rows are secrets, columns observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Channel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Channel {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::MalformedChannel("channel must be non-empty".into()));
        }
        if matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::MalformedChannel(
                "rows have different lengths".into(),
            ));
        }
        let data: Vec<f64> = matrix.into_iter().flatten().collect();
        Self::from_flat(rows, cols, data)
    }

    fn from_flat(rows: usize, cols: usize, mut data: Vec<f64>) -> Result<Self> {
        if let Some(v) = data
            .iter()
            .find(|v| !(0.0..=1.0 + STOCHASTIC_TOL).contains(*v))
        {
            return Err(Error::MalformedChannel(format!("entry {v} outside [0, 1]")));
        }
        // products of stochastic matrices can round just above 1
        data.iter_mut().for_each(|v| *v = v.min(1.0));
        for (x, row) in data.chunks(cols).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::MalformedChannel(format!("row {x} sums to {s}")));
            }
        }
        let c = Channel { rows, cols, data };
        if let Some(y) = (0..cols).find(|&y| c.column(y).all(|v| v == 0.0)) {
            return Err(Error::MalformedChannel(format!("column {y} is all zero")));
        }
        Ok(c)
    }

    /// Builds a channel, dropping all-zero columns (they carry no mass and
    /// cannot change any vulnerability).
    fn from_flat_pruned(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let keep: Vec<usize> = (0..cols)
            .filter(|&y| (0..rows).any(|x| data[x * cols + y] != 0.0))
            .collect();
        let pruned = (0..rows)
            .flat_map(|x| keep.iter().map(move |&y| (x, y)))
            .map(|(x, y)| data[x * cols + y])
            .collect();
        Self::from_flat(rows, keep.len(), pruned)
    }

    /// The channel that maps secret `x` to observation `f[x]` with certainty.
    pub fn deterministic(f: &[usize], outputs: usize) -> Result<Self> {
        let mut data = vec![0.0; f.len() * outputs];
        for (x, &y) in f.iter().enumerate() {
            if y >= outputs {
                return Err(Error::MalformedChannel(format!("output {y} out of range")));
            }
            data[x * outputs + y] = 1.0;
        }
        Self::from_flat_pruned(f.len(), outputs, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::deterministic(&(0..n).collect::<Vec<_>>(), n)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.cols..(x + 1) * self.cols]
    }

    fn column(&self, y: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |x| self.get(x, y))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// Cascade `self` then `next`: the matrix product, zero columns dropped.
    pub fn compose(&self, next: &Channel) -> Result<Channel> {
        if self.cols != next.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: next.rows,
            });
        }
        let mut data = vec![0.0; self.rows * next.cols];
        for x in 0..self.rows {
            for (z, &c) in self.row(x).iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (y, &d) in next.row(z).iter().enumerate() {
                    data[x * next.cols + y] += c * d;
                }
            }
        }
        Self::from_flat_pruned(self.rows, next.cols, data)
    }

    /// The channel restricted to the given secrets.
    pub fn restrict_rows(&self, secrets: &[usize]) -> Result<Channel> {
        if secrets.is_empty() {
            return Err(Error::MalformedChannel("empty secret subset".into()));
        }
        let mut data = Vec::with_capacity(secrets.len() * self.cols);
        for &x in secrets {
            if x >= self.rows {
                return Err(Error::DimensionMismatch {
                    expected: self.rows,
                    found: x + 1,
                });
            }
            data.extend_from_slice(self.row(x));
        }
        Self::from_flat_pruned(secrets.len(), self.cols, data)
    }
}

impl TryFrom<Vec<Vec<f64>>> for Channel {
    type Error = Error;
    fn try_from(m: Vec<Vec<f64>>) -> Result<Self> {
        Channel::new(m)
    }
}

impl From<Channel> for Vec<Vec<f64>> {
    fn from(c: Channel) -> Self {
        c.to_rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    probs: Vec<f64>,
}

impl Prior {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(domain("prior entries must lie in [0, 1]"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(domain(format!("prior sums to {s}")));
        }
        Ok(Prior { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("prior over no secrets"));
        }
        Ok(Prior {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn point(n: usize, x: usize) -> Result<Self> {
        if x >= n {
            return Err(domain("point prior outside the secret set"));
        }
        let mut probs = vec![0.0; n];
        probs[x] = 1.0;
        Ok(Prior { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A multiplicative leakage, always `>= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityValue {
    pub log_capacity: f64,
    /// `+inf` when the linear value overflows.
    pub capacity: f64,
}

impl CapacityValue {
    pub fn from_log(log_capacity: f64) -> Self {
        CapacityValue {
            log_capacity,
            capacity: log_capacity.exp(),
        }
    }
}

/// Sum over observations of the largest conditional probability.
pub fn bayes_capacity_channel(c: &Channel) -> CapacityValue {
    let total: f64 = (0..c.cols).map(|y| c.column(y).fold(0.0, f64::max)).sum();
    CapacityValue {
        log_capacity: total.ln(),
        capacity: total,
    }
}

pub fn prior_vulnerability(prior: &Prior) -> f64 {
    prior.probs.iter().copied().fold(0.0, f64::max)
}

pub fn posterior_vulnerability(prior: &Prior, c: &Channel) -> Result<f64> {
    if prior.probs.len() != c.rows {
        return Err(Error::DimensionMismatch {
            expected: c.rows,
            found: prior.probs.len(),
        });
    }
    Ok((0..c.cols)
        .map(|y| {
            prior
                .probs
                .iter()
                .enumerate()
                .map(|(x, &p)| p * c.get(x, y))
                .fold(0.0, f64::max)
        })
        .sum())
}

/// Multiplicative Bayes leakage: posterior over prior vulnerability.
pub fn leakage(prior: &Prior, c: &Channel) -> Result<f64> {
    Ok(posterior_vulnerability(prior, c)? / prior_vulnerability(prior))
}

/// Which closed form of the Gaussian capacity to use. The two differ by a
/// factor of 2 on the term from outside the ball; the derivation form agrees
/// with direct integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaussianCapacityForm {
    #[default]
    Derivation,
    Theorem,
}

impl GaussianCapacityForm {
    pub fn as_str(self) -> &'static str {
        match self {
            GaussianCapacityForm::Derivation => "derivation",
            GaussianCapacityForm::Theorem => "theorem",
        }
    }
}

impl fmt::Display for GaussianCapacityForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GaussianCapacityForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derivation" => Ok(GaussianCapacityForm::Derivation),
            "theorem" => Ok(GaussianCapacityForm::Theorem),
            _ => Err(domain(format!("expected derivation or theorem, got {s:?}"))),
        }
    }
}

/// Bayes' capacity of `N(x, sigma^2 I_p)` with secrets in the radius-`R` ball:
/// the integral over `R^p` of the supremum density.
///
/// Inside the ball the supremum is the peak density; outside, the density at
/// distance `r - R`. In spherical coordinates the outer part expands as
/// `A(S^{p-1}) / 2 * sum_i Gamma((p-i)/2) (sqrt(2) sigma)^(p-i) C(p-1, i) R^i`.
pub fn bayes_capacity_gaussian(
    p: usize,
    sigma: f64,
    radius: f64,
    form: GaussianCapacityForm,
) -> Result<CapacityValue> {
    if p == 0 {
        return Err(domain("dimension must be >= 1"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(domain(format!("sigma must be > 0, got {sigma}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(domain(format!("radius must be > 0, got {radius}")));
    }
    let pf = p as f64;
    let log_norm = pf / 2.0 * (2.0 * PI * sigma * sigma).ln();
    let ball = log_ball_volume(p, radius)?.ln();
    let ls = (2f64.sqrt() * sigma).ln();
    let lr = radius.ln();
    let terms = (0..p)
        .map(|i| {
            let i = i as f64;
            Ok(log_gamma((pf - i) / 2.0)?.ln()
                + (pf - i) * ls
                + log_binomial(pf - 1.0, i)?
                + i * lr)
        })
        .collect::<Result<Vec<_>>>()?;
    let half = match form {
        GaussianCapacityForm::Derivation => -LN_2,
        GaussianCapacityForm::Theorem => 0.0,
    };
    let outer = log_sphere_area(p)?.ln() + half + log_sum_exp(&terms);
    Ok(CapacityValue::from_log(
        (log_sum_exp(&[ball, outer]) - log_norm).max(0.0),
    ))
}

/// Bayes' capacity of the VMF mechanism on `S^{p-1}`:
/// `2 kappa^nu e^kappa / (Gamma(p/2) 2^(p/2) I_nu(kappa))`, `nu = p/2 - 1`.
pub fn bayes_capacity_vmf(p: usize, kappa: f64) -> Result<CapacityValue> {
    if p < 2 {
        return Err(domain(format!("VMF dimension must be >= 2, got {p}")));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(domain(format!("kappa must be >= 0, got {kappa}")));
    }
    if kappa == 0.0 {
        return Ok(CapacityValue::from_log(0.0));
    }
    let half = p as f64 / 2.0;
    let nu = half - 1.0;
    let log_c = LN_2 - log_gamma(half)?.ln() + nu * kappa.ln() + kappa
        - half * LN_2
        - log_bessel_i(nu, kappa)?.ln();
    Ok(CapacityValue::from_log(log_c.max(0.0)))
}

/// Capacity of a mechanism; independent VMF blocks multiply.
pub fn mechanism_capacity(m: &MechanismSpec, form: GaussianCapacityForm) -> Result<CapacityValue> {
    match m {
        MechanismSpec::Gauss { p, sigma, radius } => {
            bayes_capacity_gaussian(*p, *sigma, *radius, form)
        }
        MechanismSpec::Vmf { p, kappa } => bayes_capacity_vmf(*p, *kappa),
        MechanismSpec::VmfMulti { blocks } => {
            let mut log = 0.0;
            for b in blocks.blocks() {
                log += bayes_capacity_vmf(b.p(), b.kappa())?.log_capacity;
            }
            Ok(CapacityValue::from_log(log))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Safety {
    Safer,
    LessSafe,
    Equal,
}

impl Safety {
    pub fn as_str(self) -> &'static str {
        match self {
            Safety::Safer => "safer",
            Safety::LessSafe => "less-safe",
            Safety::Equal => "equal",
        }
    }
}

/// Whether `m1` is safer than `m2` against reconstruction: smaller log
/// capacity, compared with tolerance [`SAFETY_TOL`].
pub fn compare_safety(
    m1: &MechanismSpec,
    m2: &MechanismSpec,
    form: GaussianCapacityForm,
) -> Result<Safety> {
    if m1.dim() != m2.dim() {
        return Err(Error::DimensionMismatch {
            expected: m1.dim(),
            found: m2.dim(),
        });
    }
    let a = mechanism_capacity(m1, form)?.log_capacity;
    let b = mechanism_capacity(m2, form)?.log_capacity;
    Ok(if (a - b).abs() <= SAFETY_TOL {
        Safety::Equal
    } else if a < b {
        Safety::Safer
    } else {
        Safety::LessSafe
    })
}
