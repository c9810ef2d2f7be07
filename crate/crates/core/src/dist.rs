//! Closed-form densities, distribution functions and location/scale maps.
//!
//! The standard Laplace inverse CDF is written exactly as the sampler under
//! attack computes it, sign selector included, so the attack code can
//! reproduce sampler outputs bit for bit.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::urand::round_to_multiple;

/// A parameterized distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionSpec {
    /// Uniform on `[a, b]`.
    Uniform { a: f64, b: f64 },
    /// Mean `mu`, standard deviation `sigma`.
    Gaussian { mu: f64, sigma: f64 },
    /// Location `mu`, scale `b`; variance `2 b^2`.
    Laplace { mu: f64, b: f64 },
    /// Rate `lambda`.
    Exponential { lambda: f64 },
    /// Shape `k`, scale `theta`.
    Gamma { k: f64, theta: f64 },
    /// `k` degrees of freedom.
    ChiSquared { k: u32 },
}

impl DistributionSpec {
    pub const STANDARD_GAUSSIAN: Self = DistributionSpec::Gaussian { mu: 0.0, sigma: 1.0 };
    pub const STANDARD_LAPLACE: Self = DistributionSpec::Laplace { mu: 0.0, b: 1.0 };

    pub fn validate(&self) -> Result<()> {
        fn pos(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameters(format!("{name} must be positive and finite, got {v}")))
            }
        }
        fn finite(name: &str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameters(format!("{name} must be finite, got {v}")))
            }
        }
        match *self {
            DistributionSpec::Uniform { a, b } => {
                finite("a", a)?;
                finite("b", b)?;
                if a < b {
                    Ok(())
                } else {
                    Err(Error::InvalidParameters(format!("need a < b, got a = {a}, b = {b}")))
                }
            }
            DistributionSpec::Gaussian { mu, sigma } => finite("mu", mu).and(pos("sigma", sigma)),
            DistributionSpec::Laplace { mu, b } => finite("mu", mu).and(pos("b", b)),
            DistributionSpec::Exponential { lambda } => pos("lambda", lambda),
            DistributionSpec::Gamma { k, theta } => pos("k", k).and(pos("theta", theta)),
            DistributionSpec::ChiSquared { k } => {
                if k >= 1 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameters("chi-squared needs k >= 1".into()))
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Uniform { a, b } => 0.5 * (a + b),
            DistributionSpec::Gaussian { mu, .. } | DistributionSpec::Laplace { mu, .. } => mu,
            DistributionSpec::Exponential { lambda } => 1.0 / lambda,
            DistributionSpec::Gamma { k, theta } => k * theta,
            DistributionSpec::ChiSquared { k } => k as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DistributionSpec::Uniform { a, b } => (b - a).powi(2) / 12.0,
            DistributionSpec::Gaussian { sigma, .. } => sigma * sigma,
            DistributionSpec::Laplace { b, .. } => 2.0 * b * b,
            DistributionSpec::Exponential { lambda } => 1.0 / (lambda * lambda),
            DistributionSpec::Gamma { k, theta } => k * theta * theta,
            DistributionSpec::ChiSquared { k } => 2.0 * k as f64,
        }
    }
}

/// Density of `spec` at `x`; zero outside the support.
pub fn pdf(spec: &DistributionSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    Ok(match *spec {
        DistributionSpec::Uniform { a, b } => {
            if (a..=b).contains(&x) {
                1.0 / (b - a)
            } else {
                0.0
            }
        }
        DistributionSpec::Gaussian { mu, sigma } => {
            let z = (x - mu) / sigma;
            (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
        }
        DistributionSpec::Laplace { mu, b } => (-(x - mu).abs() / b).exp() / (2.0 * b),
        DistributionSpec::Exponential { lambda } => {
            if x < 0.0 {
                0.0
            } else {
                lambda * (-lambda * x).exp()
            }
        }
        DistributionSpec::Gamma { k, theta } => gamma_pdf(k, theta, x),
        DistributionSpec::ChiSquared { k } => gamma_pdf(0.5 * k as f64, 2.0, x),
    })
}

// x^(k-1) e^(-x/theta) / (Gamma(k) theta^k), evaluated in log space.
// libm's lgamma is a Lanczos-type approximation.
fn gamma_pdf(k: f64, theta: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match k.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0 / theta,
            _ => 0.0,
        };
    }
    ((k - 1.0) * x.ln() - x / theta - libm::lgamma(k) - k * theta.ln()).exp()
}

/// Distribution function of `spec` at `x`.
///
/// Gamma and chi-squared distribution functions are not provided.
pub fn cdf(spec: &DistributionSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    match *spec {
        DistributionSpec::Uniform { a, b } => Ok(((x - a) / (b - a)).clamp(0.0, 1.0)),
        DistributionSpec::Gaussian { mu, sigma } => Ok(gaussian_cdf((x - mu) / sigma)),
        DistributionSpec::Laplace { mu, b } => Ok(laplace_cdf((x - mu) / b)),
        DistributionSpec::Exponential { lambda } => {
            Ok(if x <= 0.0 { 0.0 } else { -(-lambda * x).exp_m1() })
        }
        DistributionSpec::Gamma { .. } => Err(Error::Unsupported("gamma CDF")),
        DistributionSpec::ChiSquared { .. } => Err(Error::Unsupported("chi-squared CDF")),
    }
}

/// CDF of the standard Laplace distribution.
pub fn laplace_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.5 * x.exp()
    } else {
        1.0 - 0.5 * (-x).exp()
    }
}

/// Inverse CDF of the standard Laplace distribution,
/// `(-1)^round(u) * ln(1 - 2|u - 1/2|)`.
///
/// This is the textbook inverse-transform sampler, and it is the formula the
/// candidate-elimination attack inverts. `u = 0` and `u = 1` hit `ln 0`
/// and are rejected.
///
/// Out of line for the same reason as `box_muller_pair`: the sampler and the
/// attack must evaluate it with identical code.
#[inline(never)]
pub fn laplace_inverse_cdf(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(u));
    }
    let sign = if round_to_multiple(u, 1.0)? == 1.0 { -1.0 } else { 1.0 };
    Ok(sign * (1.0 - 2.0 * (u - 0.5).abs()).ln())
}

/// Standard normal CDF.
///
/// Evaluated as `erfc(-x / sqrt 2) / 2` with the fdlibm rational
/// approximations of `erfc` (via the `libm` crate), accurate to about one
/// ulp, far inside the `1e-7` needed by the goodness-of-fit checks.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Maps a standard draw to a draw from `spec`.
///
/// Gaussian: `sigma * n + mu`. Laplace: `b * l + mu`. Exponential:
/// `e / lambda`. Gamma: `theta * g` for a `Gamma(k, 1)` draw `g`.
pub fn standardize(spec: &DistributionSpec, standard_draw: f64) -> Result<f64> {
    spec.validate()?;
    match *spec {
        DistributionSpec::Gaussian { mu, sigma } => Ok(sigma * standard_draw + mu),
        DistributionSpec::Laplace { mu, b } => Ok(b * standard_draw + mu),
        DistributionSpec::Exponential { lambda } => Ok(standard_draw / lambda),
        DistributionSpec::Gamma { theta, .. } => Ok(theta * standard_draw),
        DistributionSpec::Uniform { a, b } => Ok(a + (b - a) * standard_draw),
        DistributionSpec::ChiSquared { .. } => Err(Error::Unsupported("chi-squared")),
    }
}
