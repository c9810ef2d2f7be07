//! Precision-`p` uniform variates and the bit sources that produce them.
//!
//! A uniform variate is a dyadic rational `m * 2^-p` with `0 <= m < 2^p`.
//! Variates are carried by their integer numerator so that equality and
//! neighbour enumeration are exact; the `f64` value is only materialized
//! when a sampler needs it, and is always exactly representable for
//! `p <= 53`.
//!
//! Only [`BitSource::secure`] is suitable for releasing noise. Seeded sources
//! are predictable by construction and exist for reproducible experiments.

use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of random bits carried by each uniform variate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Precision(u32);

impl Precision {
    /// Bits in an IEEE-754 double mantissa, the usual precision of `random()`.
    pub const DOUBLE: Precision = Precision(53);
    pub const MAX: u32 = 53;

    pub fn new(bits: u32) -> Result<Self> {
        if (1..=Self::MAX).contains(&bits) {
            Ok(Precision(bits))
        } else {
            Err(Error::InvalidPrecision(bits))
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Size of the grid, `2^p`.
    pub fn grid_size(self) -> u64 {
        1u64 << self.0
    }

    /// Grid spacing `2^-p`, exact in `f64`.
    pub fn step(self) -> f64 {
        (-(self.0 as f64)).exp2()
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::DOUBLE
    }
}

impl TryFrom<u32> for Precision {
    type Error = Error;

    fn try_from(bits: u32) -> Result<Self> {
        Precision::new(bits)
    }
}

impl From<Precision> for u32 {
    fn from(p: Precision) -> u32 {
        p.0
    }
}

/// A point `m * 2^-p` of the uniform grid on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UniformVariate {
    numerator: u64,
    precision: Precision,
}

impl UniformVariate {
    pub fn new(numerator: u64, precision: Precision) -> Result<Self> {
        if numerator < precision.grid_size() {
            Ok(UniformVariate { numerator, precision })
        } else {
            Err(Error::NumeratorOutOfRange { numerator, precision: precision.bits() })
        }
    }

    /// Recovers the grid point holding `value`, failing unless `value` is
    /// exactly a multiple of `2^-p` in `[0, 1)`.
    pub fn from_value(value: f64, precision: Precision) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite(value));
        }
        let scaled = value * precision.grid_size() as f64;
        if !(0.0..precision.grid_size() as f64).contains(&scaled) || scaled.fract() != 0.0 {
            return Err(Error::Domain(value));
        }
        UniformVariate::new(scaled as u64, precision)
    }

    pub fn numerator(self) -> u64 {
        self.numerator
    }

    pub fn precision(self) -> Precision {
        self.precision
    }

    pub fn value(self) -> f64 {
        self.numerator as f64 * self.precision.step()
    }

    /// `1 - u`, exact. Lies in `(0, 1]`, so its logarithm is always defined.
    pub fn complement(self) -> f64 {
        (self.precision.grid_size() - self.numerator) as f64 * self.precision.step()
    }
}

/// Anything that can hand out uniform variates.
///
/// Samplers are generic over this trait so tests can replay chosen
/// variates and count consumption.
pub trait UniformSource {
    fn next_uniform(&mut self, precision: Precision) -> UniformVariate;
}

impl<S: UniformSource + ?Sized> UniformSource for &mut S {
    fn next_uniform(&mut self, precision: Precision) -> UniformVariate {
        (**self).next_uniform(precision)
    }
}

impl<S: UniformSource + ?Sized> UniformSource for Box<S> {
    fn next_uniform(&mut self, precision: Precision) -> UniformVariate {
        (**self).next_uniform(precision)
    }
}

/// How a [`BitSource`] was created.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceMode {
    /// ChaCha20 keyed from the operating system.
    Secure,
    /// Xoshiro256++ expanded from a 64-bit seed.
    Seeded(u64),
}

#[derive(Debug, Clone)]
enum Generator {
    Secure(Box<ChaCha20Rng>),
    Seeded(Xoshiro256PlusPlus),
}

/// Random bit source.
///
/// Not shareable between threads; give each worker its own source.
#[derive(Debug, Clone)]
pub struct BitSource {
    mode: SourceMode,
    rng: Generator,
}

impl BitSource {
    /// A CSPRNG keyed from OS entropy. Fails only if the OS refuses entropy.
    pub fn secure() -> Result<Self> {
        let rng = ChaCha20Rng::from_rng(OsRng).map_err(|e| Error::Entropy(e.to_string()))?;
        Ok(BitSource { mode: SourceMode::Secure, rng: Generator::Secure(Box::new(rng)) })
    }

    /// A deterministic source. Identical seeds give identical streams.
    pub fn seeded(seed: u64) -> Self {
        BitSource {
            mode: SourceMode::Seeded(seed),
            rng: Generator::Seeded(Xoshiro256PlusPlus::seed_from_u64(seed)),
        }
    }

    /// Seeded when `seed` is given, secure otherwise.
    pub fn from_seed_option(seed: Option<u64>) -> Result<Self> {
        match seed {
            Some(seed) => Ok(BitSource::seeded(seed)),
            None => BitSource::secure(),
        }
    }

    pub fn mode(&self) -> SourceMode {
        self.mode
    }

    fn next_word(&mut self) -> u64 {
        match &mut self.rng {
            Generator::Secure(rng) => rng.next_u64(),
            Generator::Seeded(rng) => rng.next_u64(),
        }
    }
}

impl UniformSource for BitSource {
    /// Takes the top `p` bits of one 64-bit word.
    fn next_uniform(&mut self, precision: Precision) -> UniformVariate {
        let numerator = self.next_word() >> (64 - precision.bits());
        UniformVariate { numerator, precision }
    }
}

/// Replays a fixed list of numerators, then panics. For tests and worked examples.
#[derive(Debug, Clone)]
pub struct Replay {
    numerators: Vec<u64>,
    position: usize,
}

impl Replay {
    pub fn new(numerators: impl IntoIterator<Item = u64>) -> Self {
        Replay { numerators: numerators.into_iter().collect(), position: 0 }
    }

    /// Replays grid points given by value. Panics if a value is off the grid.
    pub fn values(values: &[f64], precision: Precision) -> Self {
        Replay::new(values.iter().map(|&v| {
            UniformVariate::from_value(v, precision)
                .unwrap_or_else(|e| panic!("{v} is not a uniform variate: {e}"))
                .numerator()
        }))
    }

    pub fn remaining(&self) -> usize {
        self.numerators.len() - self.position
    }
}

impl UniformSource for Replay {
    fn next_uniform(&mut self, precision: Precision) -> UniformVariate {
        let numerator = *self
            .numerators
            .get(self.position)
            .unwrap_or_else(|| panic!("replay exhausted after {} variates", self.position));
        self.position += 1;
        UniformVariate::new(numerator, precision).expect("replayed numerator out of range")
    }
}

/// Wraps a source and counts how many variates were drawn through it.
#[derive(Debug, Clone)]
pub struct Counting<S> {
    inner: S,
    drawn: u64,
}

impl<S> Counting<S> {
    pub fn new(inner: S) -> Self {
        Counting { inner, drawn: 0 }
    }

    pub fn drawn(&self) -> u64 {
        self.drawn
    }

    pub fn reset(&mut self) {
        self.drawn = 0;
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: UniformSource> UniformSource for Counting<S> {
    fn next_uniform(&mut self, precision: Precision) -> UniformVariate {
        self.drawn += 1;
        self.inner.next_uniform(precision)
    }
}

/// Rounds `x` to the nearest multiple of `step`, ties to even.
pub fn round_to_multiple(x: f64, step: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidStep(step));
    }
    Ok((x / step).round_ties_even() * step)
}

/// Grid points within `window` steps of `u`, clamped to the grid, ascending.
pub fn neighbors(u: UniformVariate, window: u64) -> Vec<UniformVariate> {
    let last = u.precision.grid_size() - 1;
    let lo = u.numerator.saturating_sub(window);
    let hi = u.numerator.saturating_add(window).min(last);
    (lo..=hi).map(|numerator| UniformVariate { numerator, precision: u.precision }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(bits: u32) -> Precision {
        Precision::new(bits).unwrap()
    }

    #[test]
    fn precision_bounds() {
        assert!(Precision::new(0).is_err());
        assert!(Precision::new(54).is_err());
        assert_eq!(Precision::new(53).unwrap(), Precision::DOUBLE);
        assert_eq!(p(53).step(), f64::EPSILON / 2.0);
        assert_eq!(p(1).step(), 0.5);
    }

    #[test]
    fn variates_sit_on_the_grid() {
        let mut src = BitSource::seeded(11);
        for _ in 0..1000 {
            let u = src.next_uniform(Precision::DOUBLE);
            let v = u.value();
            assert!((0.0..1.0).contains(&v));
            let scaled = v * 2f64.powi(53);
            assert_eq!(scaled.fract(), 0.0);
            assert_eq!(scaled as u64, u.numerator());
            assert_eq!(u.complement(), 1.0 - v);
        }
    }

    #[test]
    fn one_bit_variates_are_fair() {
        // Binomial(1e5, 1/2) has sd 158; [0.49, 0.51] is about 6 sd wide.
        let mut src = BitSource::seeded(5);
        let zeros = (0..100_000).filter(|_| src.next_uniform(p(1)).value() == 0.0).count();
        let freq = zeros as f64 / 1e5;
        assert!((0.49..=0.51).contains(&freq), "{freq}");
    }

    #[test]
    fn eight_bit_grid_is_covered() {
        let mut src = BitSource::seeded(8);
        let mut seen = [false; 256];
        for _ in 0..1_000_000 {
            seen[src.next_uniform(p(8)).numerator() as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn chi_squared_uniformity() {
        // 1023 degrees of freedom; the 0.999 quantile is about 1177.
        let prec = p(10);
        let mut src = BitSource::seeded(1234);
        let mut counts = vec![0u64; 1024];
        let draws = 1_000_000u64;
        for _ in 0..draws {
            counts[src.next_uniform(prec).numerator() as usize] += 1;
        }
        let expected = draws as f64 / 1024.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 1177.0, "chi2 = {chi2}");
    }

    #[test]
    fn seeded_sources_repeat() {
        let mut a = BitSource::seeded(99);
        let mut b = BitSource::seeded(99);
        for bits in [1, 8, 32, 53] {
            for _ in 0..100 {
                assert_eq!(a.next_uniform(p(bits)), b.next_uniform(p(bits)));
            }
        }
        let mut c = BitSource::seeded(100);
        let xs: Vec<_> = (0..8).map(|_| a.next_uniform(p(53))).collect();
        let ys: Vec<_> = (0..8).map(|_| c.next_uniform(p(53))).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn secure_source_works() {
        let mut src = BitSource::secure().unwrap();
        assert_eq!(src.mode(), SourceMode::Secure);
        let u = src.next_uniform(Precision::DOUBLE);
        assert!(u.value() < 1.0);
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_to_multiple(0.3, 0.25).unwrap(), 0.25);
        assert_eq!(round_to_multiple(0.375, 0.25).unwrap(), 0.5);
        assert_eq!(round_to_multiple(0.125, 0.25).unwrap(), 0.0);
        assert_eq!(round_to_multiple(0.7, 1.0).unwrap(), 1.0);
        assert_eq!(round_to_multiple(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(round_to_multiple(1.5, 1.0).unwrap(), 2.0);
        assert!(round_to_multiple(f64::NAN, 1.0).is_err());
        assert!(round_to_multiple(f64::INFINITY, 1.0).is_err());
        assert!(round_to_multiple(1.0, 0.0).is_err());
    }

    #[test]
    fn neighbor_windows() {
        let at = |m| UniformVariate::new(m, p(8)).unwrap();
        let nums = |v: Vec<UniformVariate>| v.into_iter().map(|u| u.numerator()).collect::<Vec<_>>();
        assert_eq!(nums(neighbors(at(5), 1)), vec![4, 5, 6]);
        assert_eq!(nums(neighbors(at(0), 2)), vec![0, 1, 2]);
        assert_eq!(nums(neighbors(at(255), 1)), vec![254, 255]);
        assert_eq!(nums(neighbors(at(7), 0)), vec![7]);
    }

    #[test]
    fn replay_and_counting() {
        let mut src = Counting::new(Replay::values(&[0.25, 0.5], p(2)));
        assert_eq!(src.next_uniform(p(2)).value(), 0.25);
        assert_eq!(src.next_uniform(p(2)).value(), 0.5);
        assert_eq!(src.drawn(), 2);
        assert!(UniformVariate::from_value(0.3, p(2)).is_err());
        assert!(UniformVariate::from_value(1.0, p(2)).is_err());
    }
}
