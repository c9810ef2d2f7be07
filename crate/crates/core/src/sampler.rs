//! Noise samplers.
//!
//! Two vulnerable baselines are included because the attacks need a target:
//! inverse-transform Laplace ([`naive_laplace`]) and the caching Box-Muller
//! stream ([`GaussianStream`]). Each maps its uniforms to the output
//! injectively and can be inverted by an observer.
//!
//! The hardened samplers combine several uniforms per output through an
//! infinitely divisible decomposition, so the map is no longer invertible.
//! An attacker has to search over the extra uniforms instead:
//!
//! | sampler              | construction                                   | uniforms per draw |
//! |----------------------|------------------------------------------------|-------------------|
//! | [`secure_gaussian`]  | `sum of 2n Box-Muller outputs / sqrt(2n)`      | `2n`              |
//! | [`laplace_sqsum`]    | `(N1^2 - N2^2 + N3^2 - N4^2) / 2`              | `8m`              |
//! | [`laplace_proddiff`] | `N1 N2 - N3 N4`                                | `8m`              |
//! | [`laplace_theorem`]  | `ln(1-U1) cos(pi U2) + ln(1-U3) cos(pi U4)`    | `4`               |
//! | [`laplace_expdiff`]  | `E1 - E2`                                      | `2`               |
//!
//! All samplers return standard draws. Use [`crate::dist::standardize`] for
//! location and scale.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::laplace_inverse_cdf;
use crate::error::{Error, Result};
use crate::urand::{Precision, UniformSource, UniformVariate};

/// Default divisibility for [`secure_gaussian`]: eight uniforms per draw.
pub const DEFAULT_DIVISIBILITY: u32 = 4;

/// One Box-Muller evaluation: `(r cos 2 pi u2, r sin 2 pi u2)` with
/// `r = sqrt(-2 ln(1 - u1))`.
///
/// Kept out of line so the sampler and the attacks share one compiled copy.
/// Inlined copies can be lowered to a fused `sincos` that differs in the
/// last bit.
#[inline(never)]
pub fn box_muller_pair(u1: f64, u2: f64) -> (f64, f64) {
    let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
    let angle = TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// Whether a [`GaussianStream`] holds a cached sine-branch value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Empty,
    Cached,
}

/// A Box-Muller generator that returns the cosine branch and caches the
/// sine branch for the next call, as most standard libraries do.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    precision: Precision,
    cache: Option<f64>,
}

impl GaussianStream {
    pub fn new(precision: Precision) -> Self {
        GaussianStream { precision, cache: None }
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn phase(&self) -> Phase {
        if self.cache.is_some() {
            Phase::Cached
        } else {
            Phase::Empty
        }
    }

    /// Drops any cached value.
    pub fn clear(&mut self) {
        self.cache = None;
    }

    /// Next standard Gaussian. Draws two uniforms on every other call.
    pub fn next<S: UniformSource + ?Sized>(&mut self, src: &mut S) -> f64 {
        if let Some(cached) = self.cache.take() {
            return cached;
        }
        let u1 = src.next_uniform(self.precision);
        let u2 = src.next_uniform(self.precision);
        let (cos_branch, sin_branch) = box_muller_pair(u1.value(), u2.value());
        self.cache = Some(sin_branch);
        cos_branch
    }
}

/// Inverse-transform Laplace sampler. Vulnerable; kept as the attack baseline.
///
/// A zero uniform would hit `ln 0`, so it is replaced by `2^-p`.
pub fn naive_laplace<S: UniformSource + ?Sized>(src: &mut S, precision: Precision) -> f64 {
    let u = src.next_uniform(precision);
    let numerator = u.numerator().max(1);
    let u = numerator as f64 * precision.step();
    laplace_inverse_cdf(u).expect("u lies strictly inside (0, 1)")
}

/// Standard Gaussian from `2n` Box-Muller outputs, scaled by `1 / sqrt(2n)`.
///
/// A fresh stream is used for every call, so no cached value survives from
/// one draw to the next.
///
/// # Panics
///
/// If `n == 0`.
pub fn secure_gaussian<S: UniformSource + ?Sized>(src: &mut S, precision: Precision, n: u32) -> f64 {
    assert!(n >= 1, "divisibility must be at least 1");
    let mut stream = GaussianStream::new(precision);
    let terms = 2 * n;
    let sum: f64 = (0..terms).map(|_| stream.next(src)).sum();
    sum / f64::from(terms).sqrt()
}

/// `(a^2 - b^2 + c^2 - d^2) / 2` for standard Gaussians `[a, b, c, d]`.
pub fn laplace_from_squares(n: [f64; 4]) -> f64 {
    0.5 * (n[0] * n[0] - n[1] * n[1] + n[2] * n[2] - n[3] * n[3])
}

/// `a b - c d` for standard Gaussians `[a, b, c, d]`.
pub fn laplace_from_products(n: [f64; 4]) -> f64 {
    n[0] * n[1] - n[2] * n[3]
}

fn four_gaussians<S: UniformSource + ?Sized>(src: &mut S, precision: Precision, m: u32) -> [f64; 4] {
    std::array::from_fn(|_| secure_gaussian(src, precision, m))
}

/// Laplace as half a difference of squared Gaussians, each Gaussian drawn
/// by [`secure_gaussian`] with divisibility `m`.
pub fn laplace_sqsum<S: UniformSource + ?Sized>(src: &mut S, precision: Precision, m: u32) -> f64 {
    laplace_from_squares(four_gaussians(src, precision, m))
}

/// Laplace as a difference of Gaussian products, each Gaussian drawn by
/// [`secure_gaussian`] with divisibility `m`.
pub fn laplace_proddiff<S: UniformSource + ?Sized>(src: &mut S, precision: Precision, m: u32) -> f64 {
    laplace_from_products(four_gaussians(src, precision, m))
}

/// `cos(pi u)` with the sign taken from the top bit of `u` and the
/// magnitude from the remaining bits: `(-1)^b cos(pi (u mod 1/2))`.
///
/// Unlike `cos(pi u)` on `[0, 1)`, this is symmetric about zero.
pub fn symmetric_cos(u: UniformVariate) -> f64 {
    let bits = u.precision().bits();
    let low_mask = (1u64 << (bits - 1)) - 1;
    let negative = (u.numerator() >> (bits - 1)) & 1 == 1;
    let magnitude = (PI * ((u.numerator() & low_mask) as f64 * u.precision().step())).cos();
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

fn cos_factor(u: UniformVariate, symmetric: bool) -> f64 {
    if symmetric {
        symmetric_cos(u)
    } else {
        (PI * u.value()).cos()
    }
}

/// `ln(1-u1) c(u2) + ln(1-u3) c(u4)` where `c` is `cos(pi u)`, or
/// [`symmetric_cos`] when `symmetric` is set.
pub fn theorem_combine(u: [UniformVariate; 4], symmetric: bool) -> f64 {
    u[0].complement().ln() * cos_factor(u[1], symmetric)
        + u[2].complement().ln() * cos_factor(u[3], symmetric)
}

/// Laplace from exactly four uniforms. See [`theorem_combine`].
pub fn laplace_theorem<S: UniformSource + ?Sized>(src: &mut S, precision: Precision, symmetric: bool) -> f64 {
    let u = std::array::from_fn(|_| src.next_uniform(precision));
    theorem_combine(u, symmetric)
}

/// Laplace as a difference of two standard exponentials.
///
/// Only two uniforms per draw, so an attacker's search is a single extra
/// dimension. Weakly hardened.
pub fn laplace_expdiff<S: UniformSource + ?Sized>(src: &mut S, precision: Precision) -> f64 {
    let e1 = -src.next_uniform(precision).complement().ln();
    let e2 = -src.next_uniform(precision).complement().ln();
    e1 - e2
}

/// Output distribution family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Laplace,
    Gaussian,
}

/// Whether a sampler is invertible (`Naive`) or mixes `components`
/// uniforms into each draw (`Divisible`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardening {
    Naive,
    Divisible { components: u32 },
}

/// A named sampling procedure with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum SamplerMethod {
    NaiveLaplace,
    LaplaceExpdiff,
    LaplaceSqsum { m: u32 },
    LaplaceProddiff { m: u32 },
    LaplaceTheorem { symmetric: bool },
    /// Raw caching Box-Muller stream.
    BoxMuller,
    SecureGaussian { n: u32 },
}

impl SamplerMethod {
    /// Names accepted by [`SamplerMethod::parse`].
    pub const NAMES: [&'static str; 8] = [
        "naive-laplace",
        "laplace-expdiff",
        "laplace-sqsum",
        "laplace-proddiff",
        "laplace-theorem",
        "laplace-theorem-symmetric",
        "box-muller",
        "secure-gaussian",
    ];

    /// Resolves a method name. `divisibility` is `n` for
    /// `secure-gaussian` and `m` for the Gaussian-built Laplace samplers;
    /// other methods ignore it. Defaults: `n = 4`, `m = 1`.
    pub fn parse(name: &str, divisibility: Option<u32>) -> Result<Self> {
        let div = |default: u32| match divisibility.unwrap_or(default) {
            0 => Err(Error::InvalidDivisibility),
            d => Ok(d),
        };
        Ok(match name {
            "naive-laplace" => SamplerMethod::NaiveLaplace,
            "laplace-expdiff" => SamplerMethod::LaplaceExpdiff,
            "laplace-sqsum" => SamplerMethod::LaplaceSqsum { m: div(1)? },
            "laplace-proddiff" => SamplerMethod::LaplaceProddiff { m: div(1)? },
            "laplace-theorem" => SamplerMethod::LaplaceTheorem { symmetric: false },
            "laplace-theorem-symmetric" => SamplerMethod::LaplaceTheorem { symmetric: true },
            "box-muller" => SamplerMethod::BoxMuller,
            "secure-gaussian" => SamplerMethod::SecureGaussian { n: div(DEFAULT_DIVISIBILITY)? },
            other => return Err(Error::UnknownMethod(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplerMethod::NaiveLaplace => "naive-laplace",
            SamplerMethod::LaplaceExpdiff => "laplace-expdiff",
            SamplerMethod::LaplaceSqsum { .. } => "laplace-sqsum",
            SamplerMethod::LaplaceProddiff { .. } => "laplace-proddiff",
            SamplerMethod::LaplaceTheorem { symmetric: false } => "laplace-theorem",
            SamplerMethod::LaplaceTheorem { symmetric: true } => "laplace-theorem-symmetric",
            SamplerMethod::BoxMuller => "box-muller",
            SamplerMethod::SecureGaussian { .. } => "secure-gaussian",
        }
    }

    pub fn family(&self) -> Family {
        match self {
            SamplerMethod::BoxMuller | SamplerMethod::SecureGaussian { .. } => Family::Gaussian,
            _ => Family::Laplace,
        }
    }

    /// Divisibility parameter, if the method has one.
    pub fn divisibility(&self) -> Option<u32> {
        match *self {
            SamplerMethod::LaplaceSqsum { m } | SamplerMethod::LaplaceProddiff { m } => Some(m),
            SamplerMethod::SecureGaussian { n } => Some(n),
            _ => None,
        }
    }

    pub fn hardening(&self) -> Hardening {
        match self {
            SamplerMethod::NaiveLaplace | SamplerMethod::BoxMuller => Hardening::Naive,
            _ => Hardening::Divisible {
                components: self.uniforms_per_draw().expect("hardened samplers have fixed cost") as u32,
            },
        }
    }

    /// Uniforms consumed by every draw. `None` for the caching Box-Muller
    /// stream, which alternates between two and zero.
    pub fn uniforms_per_draw(&self) -> Option<u64> {
        match *self {
            SamplerMethod::NaiveLaplace => Some(1),
            SamplerMethod::LaplaceExpdiff => Some(2),
            SamplerMethod::LaplaceSqsum { m } | SamplerMethod::LaplaceProddiff { m } => Some(8 * u64::from(m)),
            SamplerMethod::LaplaceTheorem { .. } => Some(4),
            SamplerMethod::BoxMuller => None,
            SamplerMethod::SecureGaussian { n } => Some(2 * u64::from(n)),
        }
    }
}

impl fmt::Display for SamplerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerMethod::parse(s, None)
    }
}

/// A [`SamplerMethod`] bound to a precision, carrying whatever state the
/// method needs between draws (only the Box-Muller cache).
#[derive(Debug, Clone)]
pub struct Sampler {
    method: SamplerMethod,
    stream: GaussianStream,
}

impl Sampler {
    pub fn new(method: SamplerMethod, precision: Precision) -> Self {
        Sampler { method, stream: GaussianStream::new(precision) }
    }

    pub fn method(&self) -> SamplerMethod {
        self.method
    }

    pub fn precision(&self) -> Precision {
        self.stream.precision()
    }

    /// Cache phase; meaningful only for [`SamplerMethod::BoxMuller`].
    pub fn phase(&self) -> Phase {
        self.stream.phase()
    }

    pub fn draw<S: UniformSource + ?Sized>(&mut self, src: &mut S) -> f64 {
        let p = self.stream.precision();
        match self.method {
            SamplerMethod::NaiveLaplace => naive_laplace(src, p),
            SamplerMethod::LaplaceExpdiff => laplace_expdiff(src, p),
            SamplerMethod::LaplaceSqsum { m } => laplace_sqsum(src, p, m),
            SamplerMethod::LaplaceProddiff { m } => laplace_proddiff(src, p, m),
            SamplerMethod::LaplaceTheorem { symmetric } => laplace_theorem(src, p, symmetric),
            SamplerMethod::BoxMuller => self.stream.next(src),
            SamplerMethod::SecureGaussian { n } => secure_gaussian(src, p, n),
        }
    }

    pub fn draws<S: UniformSource + ?Sized>(&mut self, src: &mut S, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw(src)).collect()
    }
}
