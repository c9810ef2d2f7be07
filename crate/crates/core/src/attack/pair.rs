use std::f64::consts::TAU;

use super::{run_campaign, AttackConfig, AttackOutcome, Query};
use crate::error::{Error, Result};
use crate::sampler::{box_muller_pair, Phase};
use crate::urand::{neighbors, UniformVariate};

/// Recovers the uniforms behind a Box-Muller pair.
///
/// `u1 = 1 - exp(-(n1^2 + n2^2) / 2)` and `u2 = atan2(n2, n1) / 2 pi`,
/// shifted into `[0, 1)`. The quadrant-aware arctangent covers `n1 = 0`;
/// the origin maps to `(0, 0)`, which is a valid preimage of it.
pub fn invert_box_muller(n1: f64, n2: f64) -> (f64, f64) {
    let squared_radius = n1.mul_add(n1, n2 * n2);
    let u1 = -(-0.5 * squared_radius).exp_m1();
    let mut u2 = n2.atan2(n1) / TAU;
    if u2 < 0.0 {
        u2 += 1.0;
        if u2 >= 1.0 {
            u2 = 0.0;
        }
    }
    (u1, u2)
}

/// Candidate elimination against a caching Box-Muller generator.
///
/// Each observation is two consecutive answers, the cosine and sine
/// outputs of one evaluation. For a candidate `c` the pair
/// `((q1 - c) / s, (q2 - c) / s)` is inverted, both uniforms are snapped to
/// the grid, and the candidate survives only if some pair of grid points in
/// the window reproduces `(q1, q2)` exactly. `u2` neighbours wrap around
/// the circle.
///
/// `config.max_queries` counts observations, so up to twice as many
/// oracle calls are made. Fails with [`Error::PhaseMisaligned`] if the
/// oracle reports a cached value before the first query.
pub fn gaussian_pair_attack<Q: Query + ?Sized>(
    oracle: &mut Q,
    candidates: &[f64],
    config: &AttackConfig,
) -> Result<AttackOutcome> {
    if oracle.phase() == Some(Phase::Cached) {
        return Err(Error::PhaseMisaligned);
    }
    run_campaign(
        candidates,
        config,
        || {
            let first = oracle.query();
            vec![first, oracle.query()]
        },
        |q, c| pair_consistent(q[0], q[1], c, config),
    )
}

/// Whether consecutive answers `(q1, q2)` are reachable from one
/// Box-Muller evaluation offset by `candidate`.
pub fn pair_consistent(q1: f64, q2: f64, candidate: f64, config: &AttackConfig) -> bool {
    let precision = config.precision;
    let sigma = config.scale;
    let (u1, u2) = invert_box_muller((q1 - candidate) / sigma, (q2 - candidate) / sigma);
    let size = precision.grid_size();
    let snap = |u: f64| (u / precision.step()).round_ties_even() as u64;
    let m1 = UniformVariate::new(snap(u1).min(size - 1), precision).expect("clamped");
    let m2 = snap(u2) % size;
    let window = config.window.min(size / 2);

    neighbors(m1, config.window).into_iter().any(|a| {
        (0..=2 * window).any(|k| {
            let b = (m2 + size + k - window) % size;
            let (n1, n2) = box_muller_pair(a.value(), b as f64 * precision.step());
            sigma * n1 + candidate == q1 && sigma * n2 + candidate == q2
        })
    })
}
