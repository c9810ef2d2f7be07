use super::{run_campaign, AttackConfig, AttackOutcome, Query};
use crate::dist::{laplace_cdf, laplace_inverse_cdf};
use crate::error::Result;
use crate::urand::{neighbors, round_to_multiple, UniformVariate};

/// Candidate elimination against inverse-transform Laplace noise.
///
/// For every answer `q` and candidate `c`, the variate that would have
/// produced `q` is `F((q - c) / b)` snapped to the grid. The candidate
/// stays only if some grid point within `config.window` of it maps back
/// to exactly `q` through `b * F^-1(u) + c`.
///
/// The loop stops when one candidate is left and has passed
/// `config.confirmations` further queries, when every candidate has been
/// eliminated, or when the budget runs out. A candidate is never reported
/// from survival statistics alone.
pub fn mironov_attack<Q: Query + ?Sized>(
    oracle: &mut Q,
    candidates: &[f64],
    config: &AttackConfig,
) -> Result<AttackOutcome> {
    run_campaign(candidates, config, || vec![oracle.query()], |q, c| laplace_consistent(q[0], c, config))
}

/// Whether `q` is reachable as `b * F^-1(u) + c` for `u` near the snapped
/// preimage of `q`.
pub fn laplace_consistent(q: f64, candidate: f64, config: &AttackConfig) -> bool {
    let precision = config.precision;
    let b = config.scale;
    let Ok(snapped) = round_to_multiple(laplace_cdf((q - candidate) / b), precision.step()) else {
        return false;
    };
    let last = precision.grid_size() - 1;
    let numerator = ((snapped / precision.step()) as u64).min(last);
    let centre = UniformVariate::new(numerator, precision).expect("clamped to the grid");
    neighbors(centre, config.window)
        .into_iter()
        // The sampler never evaluates u = 0; that draw is remapped to 2^-p.
        .filter(|u| u.numerator() != 0)
        .any(|u| {
            let noise = laplace_inverse_cdf(u.value()).expect("0 < u < 1");
            b * noise + candidate == q
        })
}
