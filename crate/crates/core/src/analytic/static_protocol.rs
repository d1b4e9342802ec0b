use crate::combinatorics::{at_least_one, binomial_pmf, cond, odd_parity, vote_error};
use crate::model::{outcome_probability, BranchingVector, ChannelParams, OutcomeCounts, Protocol};

use super::{Basis, LayerStats, LogicalBsmResult};

/// Success probabilities of every level, computed from the leaves upwards.
/// Error fields are left at zero; see [`static_error_recursion`].
pub fn static_layer_recursion(
    b: &BranchingVector,
    params: &ChannelParams,
    basis: Basis,
) -> LayerStats {
    let d = b.depth();
    let br = b.branches();
    let (pr_d, pr_dt, err_d, _) = basis.direct(params);
    let mut pr_s = vec![0.0; d + 1];
    let mut pr_i = vec![0.0; d + 1];
    let mut pr_m = vec![0.0; d + 1];
    pr_m[d] = pr_d;
    for k in (0..d).rev() {
        pr_s[k] = if k + 1 == d {
            pr_dt
        } else {
            pr_dt * pr_m[k + 2].powi(br[k + 1] as i32)
        };
        pr_i[k] = at_least_one(pr_s[k], br[k]);
        pr_m[k] = pr_d + (1.0 - pr_d) * pr_i[k];
    }
    LayerStats {
        basis,
        pr_d,
        err_d,
        pr_s,
        pr_i,
        pr_m,
        err_s: vec![0.0; d + 1],
        err_i: vec![0.0; d + 1],
        err_m: vec![0.0; d + 1],
    }
}

/// Fills the error fields of `stats` (which must come from
/// [`static_layer_recursion`] on the same inputs).
///
/// Indirect results are preferred over the direct one; indirect results are
/// majority-voted; a single indirect result is wrong when an odd number of
/// its ingredients are.
pub fn static_error_recursion(
    b: &BranchingVector,
    params: &ChannelParams,
    stats: &mut LayerStats,
) {
    let d = b.depth();
    let br = b.branches();
    let (_, _, err_d, err_dt) = stats.basis.direct(params);
    stats.err_m[d] = err_d;
    for k in (0..d).rev() {
        stats.err_s[k] = if k + 1 == d {
            err_dt
        } else {
            odd_parity(&[(err_dt, 1), (stats.err_m[k + 2], br[k + 1])])
        };
        let weighted: f64 = (1..=br[k])
            .map(|m| binomial_pmf(br[k], m, stats.pr_s[k]) * vote_error(m, stats.err_s[k]))
            .sum();
        stats.err_i[k] = cond(weighted, stats.pr_i[k]);
        let share = cond(stats.pr_i[k], stats.pr_m[k]);
        stats.err_m[k] = share * stats.err_i[k] + (1.0 - share) * err_d;
    }
}

fn full_layers(b: &BranchingVector, params: &ChannelParams, basis: Basis) -> LayerStats {
    let mut stats = static_layer_recursion(b, params, basis);
    static_error_recursion(b, params, &mut stats);
    stats
}

/// Probability that the children of one complete level-1 pair are all
/// `ZZ'`-recovered (one for depth-1 trees).
fn child_recovery(b: &BranchingVector, stats: &LayerStats) -> f64 {
    match b.branch(1) {
        Some(b1) => stats.pr_m[2].powi(b1 as i32),
        None => 1.0,
    }
}

/// Static protocol: a two-photon BSM on every pair of corresponding photons.
pub fn static_logical_bsm(b: &BranchingVector, params: &ChannelParams) -> LogicalBsmResult {
    let stats = full_layers(b, params, Basis::ZZ);
    let b0 = b.branches()[0];
    let q = child_recovery(b, &stats);

    // Failed level-1 pairs must be recovered indirectly; at least one complete
    // pair must have all of its children recovered to read X_L X_L'.
    let pr_complete: f64 = OutcomeCounts::enumerate(b0)
        .filter(|m| m.complete >= 1)
        .map(|m| {
            outcome_probability(m, params)
                * stats.pr_i[1].powi(m.failed as i32)
                * at_least_one(q, m.complete)
        })
        .sum();

    let err_xx = stats.err_i[0];
    let err_zz = odd_parity(&[(stats.err_m[1], b0)]);
    LogicalBsmResult {
        protocol: Protocol::Static,
        pr_xx: stats.pr_i[0],
        pr_zz: stats.pr_m[1].powi(b0 as i32),
        pr_complete,
        err_xx,
        err_zz,
        err_complete: err_zz + (1.0 - err_zz) * err_xx,
    }
}

/// Success probability of the static protocol without error bookkeeping.
pub fn static_pr_complete(b: &BranchingVector, params: &ChannelParams) -> f64 {
    let stats = static_layer_recursion(b, params, Basis::ZZ);
    super::top_level_complete(
        b.branches()[0],
        stats.pr_m[1],
        child_recovery(b, &stats),
        params.eta,
    )
}
