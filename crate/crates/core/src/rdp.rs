//! Rényi-DP curves `tau(alpha)` for the von Mises-Fisher and Gaussian
//! mechanisms, and the curve type shared by conversion and accounting.

use crate::accountant::SampledGaussian;
use crate::error::{domain, Result};
use crate::specfn::{bessel_ratio_consecutive, log_bessel_ratio_scaled};
use serde::{Deserialize, Serialize};

/// A single VMF mechanism on the unit sphere `S^{p-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmfParams {
    p: usize,
    kappa: f64,
}

impl VmfParams {
    pub fn new(p: usize, kappa: f64) -> Result<Self> {
        if p < 2 {
            return Err(domain(format!("VMF dimension must be >= 2, got {p}")));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(domain(format!(
                "VMF concentration must be >= 0, got {kappa}"
            )));
        }
        Ok(VmfParams { p, kappa })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Bessel order `p/2 - 1`.
    pub fn nu(&self) -> f64 {
        self.p as f64 / 2.0 - 1.0
    }
}

/// Independent VMF mechanisms applied blockwise (one per layer, say).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiVmfParams {
    blocks: Vec<VmfParams>,
}

impl MultiVmfParams {
    pub fn new(blocks: Vec<VmfParams>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(domain("multivariate VMF needs at least one block"));
        }
        Ok(MultiVmfParams { blocks })
    }

    /// Blocks of the given sizes, all with concentration `kappa`.
    pub fn uniform(sizes: &[usize], kappa: f64) -> Result<Self> {
        let blocks = sizes
            .iter()
            .map(|&p| VmfParams::new(p, kappa))
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks)
    }

    pub fn blocks(&self) -> &[VmfParams] {
        &self.blocks
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.p).sum()
    }
}

/// Gaussian mechanism with noise multiplier `sigma` (noise std per unit of
/// clipping bound).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussParams {
    sigma: f64,
}

impl GaussParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(domain(format!("noise multiplier must be > 0, got {sigma}")));
        }
        Ok(GaussParams { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha >= 1.0) {
        return Err(domain(format!("Rényi order must be >= 1, got {alpha}")));
    }
    Ok(())
}

/// RDP of the VMF mechanism with antipodal means.
///
/// For `alpha > 1`:
/// `tau = [ln(I_nu((2a-1)k) / I_nu(k)) - nu ln(2a-1)] / (a-1)`.
/// At `alpha = 1` this is the KL upper bound `2 k I_{nu+1}(k) / I_nu(k)`.
pub fn vmf_rdp(params: &VmfParams, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    let (nu, kappa) = (params.nu(), params.kappa);
    if kappa == 0.0 {
        return Ok(0.0);
    }
    if alpha.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if alpha == 1.0 {
        return Ok(2.0 * kappa * bessel_ratio_consecutive(nu, kappa)?);
    }
    let tau = log_bessel_ratio_scaled(nu, 2.0 * alpha - 1.0, kappa)? / (alpha - 1.0);
    Ok(tau.max(0.0))
}

/// RDP of independent VMF blocks: the sum of the per-block curves.
pub fn vmf_rdp_multi(params: &MultiVmfParams, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(domain(format!(
            "multivariate VMF RDP needs alpha > 1, got {alpha}"
        )));
    }
    params.blocks.iter().map(|b| vmf_rdp(b, alpha)).sum()
}

/// `alpha / (2 sigma^2)`; unit sensitivity after clipping.
pub fn gaussian_rdp(params: &GaussParams, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    Ok(alpha / (2.0 * params.sigma * params.sigma))
}

/// Anything that bounds the Rényi divergence as a function of the order.
///
/// `tau` returns `+inf` where no bound is available (outside the curve's
/// support or on numerical failure); optimisers skip such orders.
pub trait RdpBound: Sync {
    fn tau(&self, alpha: f64) -> f64;

    /// Largest order with a finite bound.
    fn max_order(&self) -> f64 {
        f64::INFINITY
    }

    /// True when the curve is identically zero (a mechanism that leaks nothing).
    fn is_zero(&self) -> bool {
        false
    }
}

impl<F: Fn(f64) -> f64 + Sync> RdpBound for F {
    fn tau(&self, alpha: f64) -> f64 {
        self(alpha)
    }
}

/// RDP values at `alpha = 1, 2, ..., max` with linear interpolation between
/// neighbouring orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedCurve {
    values: Vec<f64>,
}

impl TabulatedCurve {
    /// `values[i]` is the bound at order `i + 1`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(domain("tabulated curve needs orders 1 and 2 at least"));
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(domain("tabulated RDP values must be >= 0"));
        }
        Ok(TabulatedCurve { values })
    }

    pub fn max_order(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, alpha: f64) -> Result<f64> {
        check_order(alpha)?;
        if alpha > self.values.len() as f64 {
            return Ok(f64::INFINITY);
        }
        let lo = alpha.floor();
        let i = lo as usize - 1;
        let frac = alpha - lo;
        if frac == 0.0 {
            return Ok(self.values[i]);
        }
        Ok((1.0 - frac) * self.values[i] + frac * self.values[i + 1])
    }
}

/// An RDP curve together with the mechanism it describes.
#[derive(Debug, Clone, PartialEq)]
pub enum RdpCurve {
    Vmf(VmfParams),
    MultiVmf(MultiVmfParams),
    Gaussian(GaussParams),
    /// Integer-order table, e.g. a Poisson-subsampled curve.
    Tabulated(TabulatedCurve),
    /// Exact Poisson-subsampled Gaussian.
    SampledGaussian(SampledGaussian),
    /// `times`-fold adaptive composition of `inner`.
    Composed {
        times: f64,
        inner: Box<RdpCurve>,
    },
}

impl RdpCurve {
    pub fn eval(&self, alpha: f64) -> Result<f64> {
        match self {
            RdpCurve::Vmf(p) => vmf_rdp(p, alpha),
            RdpCurve::MultiVmf(p) => {
                if alpha == 1.0 {
                    p.blocks.iter().map(|b| vmf_rdp(b, 1.0)).sum()
                } else {
                    vmf_rdp_multi(p, alpha)
                }
            }
            RdpCurve::Gaussian(p) => gaussian_rdp(p, alpha),
            RdpCurve::Tabulated(t) => t.eval(alpha),
            RdpCurve::SampledGaussian(g) => g.rdp(alpha),
            RdpCurve::Composed { times, inner } => Ok(times * inner.eval(alpha)?),
        }
    }

    pub fn mechanism(&self) -> &'static str {
        match self {
            RdpCurve::Vmf(_) => "vmf",
            RdpCurve::MultiVmf(_) => "vmf-multi",
            RdpCurve::Gaussian(_) => "gauss",
            RdpCurve::Tabulated(_) => "tabulated",
            RdpCurve::SampledGaussian(_) => "gauss-subsampled",
            RdpCurve::Composed { inner, .. } => inner.mechanism(),
        }
    }
}

impl RdpBound for RdpCurve {
    fn tau(&self, alpha: f64) -> f64 {
        match self.eval(alpha) {
            Ok(v) if !v.is_nan() => v,
            _ => f64::INFINITY,
        }
    }

    fn max_order(&self) -> f64 {
        match self {
            RdpCurve::Tabulated(t) => t.max_order() as f64,
            RdpCurve::SampledGaussian(g) => g.max_order(),
            RdpCurve::Composed { inner, .. } => inner.max_order(),
            _ => f64::INFINITY,
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            RdpCurve::Vmf(p) => p.kappa == 0.0,
            RdpCurve::MultiVmf(p) => p.blocks.iter().all(|b| b.kappa == 0.0),
            RdpCurve::Tabulated(t) => t.values.iter().all(|&v| v == 0.0),
            RdpCurve::Composed { times, inner } => *times == 0.0 || inner.is_zero(),
            _ => false,
        }
    }
}

/// A gradient-perturbation mechanism as used by accounting and capacity
/// comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "kebab-case")]
pub enum MechanismSpec {
    /// Gaussian noise with multiplier `sigma` on `R^p`, inputs clipped to a
    /// ball of radius `radius`.
    Gauss {
        p: usize,
        sigma: f64,
        radius: f64,
    },
    Vmf {
        p: usize,
        kappa: f64,
    },
    VmfMulti {
        blocks: MultiVmfParams,
    },
}

impl MechanismSpec {
    pub fn gauss(p: usize, sigma: f64) -> Result<Self> {
        GaussParams::new(sigma)?;
        if p == 0 {
            return Err(domain("Gaussian dimension must be >= 1"));
        }
        Ok(MechanismSpec::Gauss {
            p,
            sigma,
            radius: 1.0,
        })
    }

    /// Gaussian whose inputs lie in a ball of radius `radius`.
    pub fn gauss_with_radius(p: usize, sigma: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(domain(format!("radius must be > 0, got {radius}")));
        }
        Self::gauss(p, sigma)?;
        Ok(MechanismSpec::Gauss { p, sigma, radius })
    }

    pub fn vmf(p: usize, kappa: f64) -> Result<Self> {
        VmfParams::new(p, kappa)?;
        Ok(MechanismSpec::Vmf { p, kappa })
    }

    pub fn dim(&self) -> usize {
        match self {
            MechanismSpec::Gauss { p, .. } | MechanismSpec::Vmf { p, .. } => *p,
            MechanismSpec::VmfMulti { blocks } => blocks.total_dim(),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, MechanismSpec::Gauss { .. })
    }

    /// The unsubsampled RDP curve of one application.
    pub fn curve(&self) -> Result<RdpCurve> {
        Ok(match self {
            MechanismSpec::Gauss { sigma, .. } => RdpCurve::Gaussian(GaussParams::new(*sigma)?),
            MechanismSpec::Vmf { p, kappa } => RdpCurve::Vmf(VmfParams::new(*p, *kappa)?),
            MechanismSpec::VmfMulti { blocks } => RdpCurve::MultiVmf(blocks.clone()),
        })
    }
}
