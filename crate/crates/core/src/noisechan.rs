//! The per-step noise channels of DP-SGD: clip, average, perturb with
//! Gaussian noise, or normalise and perturb with VMF noise.

use crate::error::{domain, Error, Result};
use crate::specfn::{log_bessel_i, log_sphere_area};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use std::f64::consts::PI;

const UNIT_TOL: f64 = 1e-9;

/// A seedable, reproducible random stream (ChaCha20).
#[derive(Debug, Clone)]
pub struct RandomSource(ChaCha20Rng);

impl RandomSource {
    pub fn from_seed(seed: u64) -> Self {
        RandomSource(ChaCha20Rng::seed_from_u64(seed))
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        1.0 - self.0.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(domain("gradient must have at least one coordinate"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("gradient entries must be finite"));
        }
        Ok(GradientVector(values))
    }

    /// The unit vector along coordinate `axis`.
    pub fn axis(p: usize, axis: usize) -> Result<Self> {
        if axis >= p {
            return Err(domain(format!("axis {axis} outside dimension {p}")));
        }
        let mut v = vec![0.0; p];
        v[axis] = 1.0;
        Ok(GradientVector(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dot(&self, other: &GradientVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

fn norm(v: &[f64]) -> f64 {
    // scaled to avoid overflow in the squares
    let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

/// `g / max(1, |g| / bound)`.
pub fn clip(g: &GradientVector, bound: f64) -> Result<GradientVector> {
    if !(bound > 0.0) {
        return Err(domain(format!("clipping bound must be > 0, got {bound}")));
    }
    let n = g.norm();
    if n <= bound {
        return Ok(g.clone());
    }
    let s = bound / n;
    Ok(GradientVector(g.0.iter().map(|x| x * s).collect()))
}

pub fn average(gs: &[GradientVector]) -> Result<GradientVector> {
    let first = gs.first().ok_or(Error::EmptyBatch)?;
    let p = first.len();
    let mut sum = vec![0.0; p];
    for g in gs {
        if g.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: g.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(&g.0) {
            *s += x;
        }
    }
    let n = gs.len() as f64;
    Ok(GradientVector(sum.into_iter().map(|s| s / n).collect()))
}

/// Adds `N(0, (bound sigma / batch)^2)` to every coordinate.
pub fn gaussian_perturb(
    g: &GradientVector,
    sigma: f64,
    bound: f64,
    batch: usize,
    rng: &mut RandomSource,
) -> Result<GradientVector> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(domain(format!("sigma must be >= 0, got {sigma}")));
    }
    if !(bound > 0.0) {
        return Err(domain(format!("clipping bound must be > 0, got {bound}")));
    }
    if batch == 0 {
        return Err(Error::EmptyBatch);
    }
    let std = bound * sigma / batch as f64;
    Ok(GradientVector(
        g.0.iter().map(|x| x + std * rng.normal()).collect(),
    ))
}

pub fn normalize(g: &GradientVector) -> Result<GradientVector> {
    let n = g.norm();
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(GradientVector(g.0.iter().map(|x| x / n).collect()))
}

fn check_unit(v: &GradientVector) -> Result<()> {
    let n = v.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidMean(n));
    }
    Ok(())
}

/// A draw from the VMF distribution with mean direction `mean`.
///
/// Wood's rejection sampler for the cosine `w = mean . y`, with the
/// acceptance test in log space, then a uniform direction in the tangent
/// space from a projected Gaussian.
pub fn vmf_sample(
    mean: &GradientVector,
    kappa: f64,
    rng: &mut RandomSource,
) -> Result<GradientVector> {
    let p = mean.len();
    if p < 2 {
        return Err(domain(format!("VMF dimension must be >= 2, got {p}")));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(domain(format!("kappa must be >= 0, got {kappa}")));
    }
    check_unit(mean)?;
    let m1 = (p - 1) as f64;
    let b = m1 / (2.0 * kappa + (4.0 * kappa * kappa + m1 * m1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(m1 / 2.0, m1 / 2.0).map_err(|e| domain(e.to_string()))?;
    let (w, one_minus_w2) = loop {
        let z: f64 = beta.sample(rng.rng());
        let den = 1.0 - (1.0 - b) * z;
        let w = (1.0 - (1.0 + b) * z) / den;
        let log_u = rng.uniform().ln();
        if kappa * w + m1 * (1.0 - x0 * w).ln() - c >= log_u {
            // (1 - w)(1 + w) without cancellation
            let one_minus = 2.0 * b * z / den;
            let one_plus = 2.0 * (1.0 - z) / den;
            break (w, (one_minus * one_plus).max(0.0));
        }
    };
    let mu = mean.as_slice();
    let tangent = loop {
        let mut v: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
        let along: f64 = v.iter().zip(mu).map(|(a, b)| a * b).sum();
        for (vi, mi) in v.iter_mut().zip(mu) {
            *vi -= along * mi;
        }
        let n = norm(&v);
        if n > 1e-12 {
            break v.into_iter().map(|x| x / n).collect::<Vec<_>>();
        }
    };
    let s = one_minus_w2.sqrt();
    let y: Vec<f64> = mu
        .iter()
        .zip(&tangent)
        .map(|(m, t)| w * m + s * t)
        .collect();
    normalize(&GradientVector(y))
}

/// `ln` of the VMF density `C_{p,kappa} exp(kappa mean . y)` on `S^{p-1}`.
pub fn vmf_log_density(mean: &GradientVector, kappa: f64, y: &GradientVector) -> Result<f64> {
    let p = mean.len();
    if p < 2 || y.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: y.len(),
        });
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(domain(format!("kappa must be >= 0, got {kappa}")));
    }
    check_unit(mean)?;
    check_unit(y)?;
    if kappa == 0.0 {
        return Ok(-log_sphere_area(p)?.ln());
    }
    let nu = p as f64 / 2.0 - 1.0;
    let log_norm = (nu + 1.0) * (2.0 * PI).ln() + log_bessel_i(nu, kappa)?.ln() - nu * kappa.ln();
    Ok(kappa * mean.dot(y) - log_norm)
}
