//! Floating-point-aware noise sampling for differential privacy.
//!
//! Noise drawn by inverse transform from a single `2^-p` uniform leaves
//! gaps in the output space, and an observer can invert it to test which
//! input produced a noisy answer. This crate provides:
//!
//! * [`urand`]: the uniform grid and bit sources,
//! * [`dist`]: densities, CDFs and location/scale maps,
//! * [`sampler`]: the invertible baselines and samplers hardened by
//!   infinite divisibility,
//! * [`attack`]: candidate-elimination attacks and brute-force cost,
//! * [`stats`]: KS and moment checks,
//! * [`cli`]: the `fpnoise` command-line front end.
//!
//! ```
//! use fpnoise::attack::{mironov_attack, AttackConfig, QueryOracle};
//! use fpnoise::sampler::SamplerMethod;
//! use fpnoise::urand::{BitSource, Precision};
//!
//! let config = AttackConfig::default();
//! let mut naive =
//!     QueryOracle::new(1.0, SamplerMethod::NaiveLaplace, Precision::DOUBLE, 1.0, BitSource::seeded(3))?;
//! assert_eq!(mironov_attack(&mut naive, &[0.0, 1.0], &config)?.identified(), Some(1.0));
//!
//! let hardened = SamplerMethod::LaplaceTheorem { symmetric: true };
//! let mut oracle = QueryOracle::new(1.0, hardened, Precision::DOUBLE, 1.0, BitSource::seeded(3))?;
//! assert_eq!(mironov_attack(&mut oracle, &[0.0, 1.0], &config)?.identified(), None);
//! # Ok::<(), fpnoise::Error>(())
//! ```

pub mod attack;
pub mod cli;
pub mod dist;
mod error;
pub mod sampler;
pub mod stats;
pub mod urand;

pub use error::{Error, Result};

// Book chapters are compiled as doctests so their snippets stay in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/uniform-variates.md")]
    mod uniform_variates {}
    #[doc = include_str!("../../../book/src/inverse-transform-attack.md")]
    mod inverse_transform_attack {}
    #[doc = include_str!("../../../book/src/box-muller-attack.md")]
    mod box_muller_attack {}
    #[doc = include_str!("../../../book/src/divisibility.md")]
    mod divisibility {}
    #[doc = include_str!("../../../book/src/hardened-samplers.md")]
    mod hardened_samplers {}
    #[doc = include_str!("../../../book/src/attack-cost.md")]
    mod attack_cost {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
