//! Candidate-elimination attacks on floating-point noise samplers.
//!
//! The attacker sees noisy answers `q = v + noise` for a hidden value `v`
//! that lies in a known finite candidate set. For each candidate `c` it
//! asks whether `q - c` could have been produced by the sampler at all,
//! by inverting the sampler back to its uniform variates, snapping those
//! to the `2^-p` grid, and recomputing the forward map bit for bit.
//! Candidates that cannot reproduce `q` are removed.
//!
//! * [`mironov_attack`] targets inverse-transform Laplace noise.
//! * [`gaussian_pair_attack`] targets caching Box-Muller noise, reading the
//!   cosine and sine outputs of one evaluation on consecutive queries.
//! * [`brute_force_single_gaussian`] is the search an attacker is left with
//!   when only one Box-Muller output is observed. Its cost is what the
//!   hardened samplers multiply.

mod brute;
mod mironov;
mod pair;

pub use brute::{
    brute_force_partitioned, brute_force_single_gaussian, count_feasible_checks, expected_checks,
    level_curve_u1, BruteForceResult, MAX_BRUTE_FORCE_PRECISION,
};
pub use mironov::{laplace_consistent, mironov_attack};
pub use pair::{gaussian_pair_attack, invert_box_muller, pair_consistent};

use serde::{Deserialize, Serialize};

use crate::dist::{standardize, DistributionSpec};
use crate::error::{Error, Result};
use crate::sampler::{Family, Phase, Sampler, SamplerMethod};
use crate::urand::{Precision, UniformSource};

/// Default grid-neighbour window searched around each recovered variate.
pub const DEFAULT_WINDOW: u64 = 2;
/// Default number of queries the last surviving candidate must pass before
/// it is reported as identified.
pub const DEFAULT_CONFIRMATIONS: u64 = 20;
/// Default query budget.
pub const DEFAULT_MAX_QUERIES: u64 = 100;

/// A noisy query interface.
pub trait Query {
    /// Answers one query with fresh noise.
    fn query(&mut self) -> f64;

    /// Box-Muller cache phase, when the noise comes from a caching stream.
    fn phase(&self) -> Option<Phase> {
        None
    }
}

/// Answers `v + scale * noise` for a hidden target `v`.
#[derive(Debug, Clone)]
pub struct QueryOracle<S> {
    target: f64,
    spec: DistributionSpec,
    sampler: Sampler,
    src: S,
    calls: u64,
}

impl<S: UniformSource> QueryOracle<S> {
    /// `scale` is the Laplace `b` or the Gaussian `sigma`, by sampler family.
    pub fn new(target: f64, method: SamplerMethod, precision: Precision, scale: f64, src: S) -> Result<Self> {
        let spec = match method.family() {
            Family::Laplace => DistributionSpec::Laplace { mu: target, b: scale },
            Family::Gaussian => DistributionSpec::Gaussian { mu: target, sigma: scale },
        };
        spec.validate()?;
        Ok(QueryOracle { target, spec, sampler: Sampler::new(method, precision), src, calls: 0 })
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// The hidden value. For scoring only; attacks never call this.
    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn method(&self) -> SamplerMethod {
        self.sampler.method()
    }
}

impl<S: UniformSource> Query for QueryOracle<S> {
    fn query(&mut self) -> f64 {
        self.calls += 1;
        let noise = self.sampler.draw(&mut self.src);
        standardize(&self.spec, noise).expect("spec validated at construction")
    }

    fn phase(&self) -> Option<Phase> {
        match self.sampler.method() {
            SamplerMethod::BoxMuller => Some(self.sampler.phase()),
            _ => None,
        }
    }
}

/// Attack parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub precision: Precision,
    /// Grid neighbours checked on each side of a recovered variate.
    pub window: u64,
    /// Query budget. The pair attack counts query pairs.
    pub max_queries: u64,
    /// Extra queries the sole survivor must pass. Zero stops as soon as one
    /// candidate is left.
    pub confirmations: u64,
    /// Noise scale the mechanism is known to use.
    pub scale: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            precision: Precision::DOUBLE,
            window: DEFAULT_WINDOW,
            max_queries: DEFAULT_MAX_QUERIES,
            confirmations: DEFAULT_CONFIRMATIONS,
            scale: 1.0,
        }
    }
}

/// How a campaign ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AttackStatus {
    Identified { candidate: f64 },
    AllEliminated,
    BudgetExhausted,
}

/// One query of a campaign and the candidates it removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub query: Vec<f64>,
    pub eliminated: Vec<f64>,
    pub remaining: usize,
}

/// Result of an attack campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    #[serde(flatten)]
    pub status: AttackStatus,
    pub queries_used: u64,
    pub trace: Vec<TraceStep>,
}

impl AttackOutcome {
    pub fn identified(&self) -> Option<f64> {
        match self.status {
            AttackStatus::Identified { candidate } => Some(candidate),
            _ => None,
        }
    }
}

fn validate_candidates(candidates: &[f64]) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut live: Vec<f64> = Vec::with_capacity(candidates.len());
    for &c in candidates {
        if !c.is_finite() {
            return Err(Error::NonFinite(c));
        }
        if !live.iter().any(|&x| x.to_bits() == c.to_bits()) {
            live.push(c);
        }
    }
    Ok(live)
}

/// Shared elimination loop: observe, drop inconsistent candidates, and stop
/// once a single candidate has survived `confirmations` further queries.
fn run_campaign(
    candidates: &[f64],
    config: &AttackConfig,
    mut observe: impl FnMut() -> Vec<f64>,
    consistent: impl Fn(&[f64], f64) -> bool,
) -> Result<AttackOutcome> {
    let mut live = validate_candidates(candidates)?;
    let mut trace = Vec::new();
    if live.len() == 1 {
        return Ok(AttackOutcome {
            status: AttackStatus::Identified { candidate: live[0] },
            queries_used: 0,
            trace,
        });
    }

    let mut queries = 0;
    let mut confirmed: Option<u64> = None;
    while queries < config.max_queries {
        let q = observe();
        queries += 1;
        let (kept, eliminated): (Vec<f64>, Vec<f64>) = live.iter().partition(|&&c| consistent(&q, c));
        live = kept;
        trace.push(TraceStep { query: q, eliminated, remaining: live.len() });

        match live.len() {
            0 => {
                return Ok(AttackOutcome { status: AttackStatus::AllEliminated, queries_used: queries, trace });
            }
            1 => {
                let passed = confirmed.map_or(0, |n| n + 1);
                confirmed = Some(passed);
                if passed >= config.confirmations {
                    return Ok(AttackOutcome {
                        status: AttackStatus::Identified { candidate: live[0] },
                        queries_used: queries,
                        trace,
                    });
                }
            }
            _ => {}
        }
    }
    Ok(AttackOutcome { status: AttackStatus::BudgetExhausted, queries_used: queries, trace })
}
