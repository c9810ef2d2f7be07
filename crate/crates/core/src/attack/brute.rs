use std::collections::BTreeSet;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::sampler::box_muller_pair;
use crate::urand::{Precision, UniformVariate};

/// Largest precision the exhaustive search will run at.
pub const MAX_BRUTE_FORCE_PRECISION: u32 = 20;

/// `u1` on the level curve of a cosine-branch output `n1` at angle `u2`:
/// `1 - exp(-n1^2 / (2 cos^2(2 pi u2)))`.
pub fn level_curve_u1(n1: f64, u2: f64) -> Result<f64> {
    let c = (TAU * u2).cos();
    if c == 0.0 {
        return Err(Error::UndefinedLevelCurve(u2));
    }
    Ok(-(-(n1 * n1) / (2.0 * c * c)).exp_m1())
}

/// Number of grid points in `[1 - exp(-n1^2 / 2), 1)`, the only values of
/// `u1` that can produce `n1` on the cosine branch.
pub fn count_feasible_checks(n1: f64, precision: Precision) -> Result<u64> {
    Ok(precision.grid_size() - lowest_feasible(n1, precision)?)
}

fn lowest_feasible(n1: f64, precision: Precision) -> Result<u64> {
    if !n1.is_finite() {
        return Err(Error::NonFinite(n1));
    }
    let threshold = -(-0.5 * n1 * n1).exp_m1();
    // Scaling by 2^p is exact.
    let scaled = (threshold * precision.grid_size() as f64).ceil() as u64;
    Ok(scaled.min(precision.grid_size()))
}

/// Mean search size for one standard Gaussian output, `2^(p - 1/2)`.
pub fn expected_checks(precision: Precision) -> f64 {
    (precision.bits() as f64 - 0.5).exp2()
}

/// Output of [`brute_force_single_gaussian`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceResult {
    /// Every grid pair whose cosine branch equals the target, sorted.
    pub pairs: Vec<(UniformVariate, UniformVariate)>,
    /// Number of `u1` values examined.
    pub checks: u64,
}

/// Exhaustive preimage search for a single cosine-branch output `n1`.
///
/// Walks every feasible `u1` (plus `window` below the analytic bound, to
/// absorb rounding of the bound itself), solves `cos(2 pi u2) = n1 / r` for
/// both angle branches, and tests the `window` grid neighbours of each
/// solution by recomputing the cosine branch. `checks` counts the `u1`
/// values walked, so its mean over Gaussian `n1` tracks
/// [`expected_checks`].
pub fn brute_force_single_gaussian(n1: f64, precision: Precision, window: u64) -> Result<BruteForceResult> {
    brute_force_partitioned(n1, precision, window, 1)
}

/// [`brute_force_single_gaussian`] split across `partitions` threads.
/// The result does not depend on `partitions`.
pub fn brute_force_partitioned(
    n1: f64,
    precision: Precision,
    window: u64,
    partitions: usize,
) -> Result<BruteForceResult> {
    if precision.bits() > MAX_BRUTE_FORCE_PRECISION {
        return Err(Error::TooExpensive(precision.bits()));
    }
    let start = lowest_feasible(n1, precision)?.saturating_sub(window);
    let end = precision.grid_size();
    let partitions = partitions.max(1) as u64;
    let chunk = (end - start).div_ceil(partitions).max(1);

    let ranges: Vec<(u64, u64)> = (0..partitions)
        .map(|i| (start + i * chunk, (start + (i + 1) * chunk).min(end)))
        .filter(|(lo, hi)| lo < hi)
        .collect();

    let found: Vec<Vec<(u64, u64)>> = if ranges.len() <= 1 {
        ranges.iter().map(|&(lo, hi)| search_range(n1, precision, window, lo, hi)).collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .iter()
                .map(|&(lo, hi)| scope.spawn(move || search_range(n1, precision, window, lo, hi)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("search worker panicked")).collect()
        })
    };

    let pairs: BTreeSet<(u64, u64)> = found.into_iter().flatten().collect();
    let to_variate = |m| UniformVariate::new(m, precision).expect("grid numerator");
    Ok(BruteForceResult {
        pairs: pairs.into_iter().map(|(a, b)| (to_variate(a), to_variate(b))).collect(),
        checks: end - start,
    })
}

fn search_range(n1: f64, precision: Precision, window: u64, lo: u64, hi: u64) -> Vec<(u64, u64)> {
    let size = precision.grid_size();
    let step = precision.step();
    let window = window.min(size / 2);
    let matches = |m1: u64, m2: u64| box_muller_pair(m1 as f64 * step, m2 as f64 * step).0 == n1;
    let mut found = Vec::new();

    for m1 in lo..hi {
        let u1 = m1 as f64 * step;
        let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
        if radius == 0.0 {
            // Zero radius: every angle gives a zero output.
            found.extend((0..size).filter(|&m2| matches(m1, m2)).map(|m2| (m1, m2)));
            continue;
        }
        let angle = (n1 / radius).clamp(-1.0, 1.0).acos() / TAU;
        for branch in [angle, 1.0 - angle] {
            let centre = (branch / step).round_ties_even() as u64 % size;
            for k in 0..=2 * window {
                let m2 = (centre + size + k - window) % size;
                if matches(m1, m2) {
                    found.push((m1, m2));
                }
            }
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::invert_box_muller;
    use crate::urand::{BitSource, UniformSource};

    fn p(bits: u32) -> Precision {
        Precision::new(bits).unwrap()
    }

    #[test]
    fn level_curve_examples() {
        assert_eq!(level_curve_u1(0.0, 0.3).unwrap(), 0.0);
        assert_eq!(level_curve_u1(1.0, 0.0).unwrap(), invert_box_muller(1.0, 0.0).0);
        for n1 in [-40.0, -1.0, 0.5, 3.0, 1e3] {
            for u2 in [0.0, 0.1, 0.4, 0.9] {
                let u1 = level_curve_u1(n1, u2).unwrap();
                assert!((0.0..=1.0).contains(&u1));
            }
        }
        // The curve reproduces n1 through the cosine branch.
        let u1 = level_curve_u1(0.8, 0.1).unwrap();
        assert!((box_muller_pair(u1, 0.1).0 - 0.8).abs() < 1e-14);
    }

    #[test]
    fn feasible_count_examples() {
        assert_eq!(count_feasible_checks(0.0, p(16)).unwrap(), 1 << 16);
        assert_eq!(count_feasible_checks(0.0, Precision::DOUBLE).unwrap(), 1 << 53);
        assert_eq!(count_feasible_checks(1.0, p(16)).unwrap(), 39_749);
        assert_eq!(count_feasible_checks(1.0, p(16)).unwrap(), count_feasible_checks(-1.0, p(16)).unwrap());
        assert_eq!(count_feasible_checks(50.0, p(16)).unwrap(), 0);
        assert!(count_feasible_checks(f64::NAN, p(16)).is_err());
    }

    #[test]
    fn feasible_count_matches_enumeration() {
        let prec = p(16);
        for n1 in [0.0f64, 0.3, 1.0, 1.7, 2.5, 4.0] {
            let threshold = 1.0 - (-0.5 * n1 * n1).exp();
            let enumerated = (0..prec.grid_size()).filter(|&m| m as f64 * prec.step() >= threshold).count() as u64;
            let counted = count_feasible_checks(n1, prec).unwrap();
            assert!(counted.abs_diff(enumerated) <= 1, "{n1}: {counted} vs {enumerated}");
        }
    }

    #[test]
    fn feasible_count_shrinks_with_magnitude() {
        let prec = p(20);
        let counts: Vec<u64> = (0..200).map(|i| count_feasible_checks(i as f64 * 0.05, prec).unwrap()).collect();
        assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn expected_checks_values() {
        assert_eq!(expected_checks(Precision::DOUBLE), 52.5f64.exp2());
        assert!((expected_checks(p(16)) - 46_340.950_011_841_58).abs() < 1e-6);
        assert!((expected_checks(p(1)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn recovers_planted_pairs() {
        let prec = p(12);
        let mut src = BitSource::seeded(12);
        for _ in 0..50 {
            let u1 = src.next_uniform(prec);
            let u2 = src.next_uniform(prec);
            let n1 = box_muller_pair(u1.value(), u2.value()).0;
            let result = brute_force_single_gaussian(n1, prec, 2).unwrap();
            assert!(result.pairs.contains(&(u1, u2)), "missed ({}, {})", u1.value(), u2.value());
            for &(a, b) in &result.pairs {
                assert_eq!(box_muller_pair(a.value(), b.value()).0, n1);
            }
        }
    }

    #[test]
    fn zero_output_preimages() {
        let prec = p(8);
        let result = brute_force_single_gaussian(0.0, prec, 2).unwrap();
        let with_zero_u1 = result.pairs.iter().filter(|(a, _)| a.numerator() == 0).count();
        assert_eq!(with_zero_u1, 256);
        assert!(result.pairs.iter().all(|(a, _)| a.numerator() == 0));
        assert_eq!(result.checks, 256);
    }

    #[test]
    fn partitioning_is_invisible() {
        let prec = p(14);
        let mut src = BitSource::seeded(77);
        for _ in 0..5 {
            let n1 = box_muller_pair(src.next_uniform(prec).value(), src.next_uniform(prec).value()).0;
            let serial = brute_force_single_gaussian(n1, prec, 2).unwrap();
            for parts in [2, 3, 8] {
                assert_eq!(brute_force_partitioned(n1, prec, 2, parts).unwrap(), serial);
            }
        }
    }

    #[test]
    fn refuses_large_precision() {
        assert_eq!(brute_force_single_gaussian(0.5, p(21), 2), Err(Error::TooExpensive(21)));
    }
}
