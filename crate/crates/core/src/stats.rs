//! Goodness-of-fit and moment checks used by the tests and `fpnoise verify`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{Sampler, SamplerMethod};
use crate::urand::{Precision, UniformSource};

/// Asymptotic Kolmogorov critical value `c(alpha)` for `alpha` = 0.01.
pub const KS_C_001: f64 = 1.628;
/// Asymptotic Kolmogorov critical value `c(alpha)` for `alpha` = 0.05.
pub const KS_C_005: f64 = 1.358;

/// Largest precision [`distinct_output_count`] accepts.
pub const MAX_DISTINCT_PRECISION: u32 = 16;

/// Significance level for KS tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alpha {
    #[serde(rename = "0.01")]
    OnePercent,
    #[serde(rename = "0.05")]
    FivePercent,
}

impl Alpha {
    pub fn coefficient(self) -> f64 {
        match self {
            Alpha::OnePercent => KS_C_001,
            Alpha::FivePercent => KS_C_005,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Alpha::OnePercent => 0.01,
            Alpha::FivePercent => 0.05,
        }
    }
}

/// One-sample critical value `c(alpha) / sqrt(n)`.
pub fn ks_critical(alpha: Alpha, n: usize) -> f64 {
    alpha.coefficient() / (n as f64).sqrt()
}

/// Two-sample critical value `c(alpha) sqrt((n + m) / (n m))`.
pub fn ks_critical_two_sample(alpha: Alpha, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    alpha.coefficient() * ((n + m) / (n * m)).sqrt()
}

/// Sorts in place by total order; NaNs go last.
pub fn sort_samples(samples: &mut [f64]) {
    samples.sort_unstable_by(f64::total_cmp);
}

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n(x) - F(x)|`.
///
/// `samples` must already be sorted ascending.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let n = samples.len() as f64;
    let d = samples.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    });
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov statistic. Both inputs must be sorted.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Outcome of a one-sample KS test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub critical: f64,
    pub alpha: f64,
    pub pass: bool,
}

/// Sorts `samples` and tests them against `cdf`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F, alpha: Alpha) -> Result<KsReport> {
    sort_samples(samples);
    let statistic = ks_statistic(samples, cdf)?;
    let critical = ks_critical(alpha, samples.len());
    Ok(KsReport { statistic, critical, alpha: alpha.value(), pass: statistic < critical })
}

/// Sample moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (n - 1) estimator.
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Mean, unbiased variance, standardized third moment and excess kurtosis.
pub fn moments(samples: &[f64]) -> Result<MomentSummary> {
    const MIN: usize = 4;
    if samples.len() < MIN {
        return Err(Error::TooFewSamples { needed: MIN, got: samples.len() });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (m2, m3, m4) = samples.iter().fold((0.0, 0.0, 0.0), |(m2, m3, m4), &x| {
        let d = x - mean;
        let d2 = d * d;
        (m2 + d2, m3 + d2 * d, m4 + d2 * d2)
    });
    if m2 == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let (m2n, m3n, m4n) = (m2 / n, m3 / n, m4 / n);
    Ok(MomentSummary {
        count: samples.len(),
        mean,
        variance: m2 / (n - 1.0),
        skewness: m3n / m2n.powf(1.5),
        excess_kurtosis: m4n / (m2n * m2n) - 3.0,
    })
}

/// Number of distinct output bit patterns among `draws` samples.
///
/// Restricted to `p <= 16`, where the invertible samplers' image is small
/// enough to saturate.
pub fn distinct_output_count<S: UniformSource + ?Sized>(
    method: SamplerMethod,
    precision: Precision,
    draws: usize,
    src: &mut S,
) -> Result<usize> {
    if precision.bits() > MAX_DISTINCT_PRECISION {
        return Err(Error::InvalidParameters(format!(
            "distinct-output counting is limited to p <= {MAX_DISTINCT_PRECISION}"
        )));
    }
    let mut sampler = Sampler::new(method, precision);
    let seen: HashSet<u64> = (0..draws).map(|_| sampler.draw(src).to_bits()).collect();
    Ok(seen.len())
}
