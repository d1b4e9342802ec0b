use crate::combinatorics::{at_least_one, binomial_pmf, cond, odd_parity, vote_error};
use crate::model::{outcome_probability, BranchingVector, ChannelParams, OutcomeCounts, Protocol};

use super::static_protocol::{static_error_recursion, static_layer_recursion};
use super::{top_level_complete, Basis, DynamicLayerStats, LogicalBsmResult};

/// Per-level recursion of the adaptive protocol.
///
/// Below a complete pair the children are measured with BSMs and support a
/// majority vote for `XX'`-backed indirect `ZZ'`; below a partial or failed
/// pair they are measured singly, so the pair's `ZZ'` can be rebuilt from
/// two independent indirect `Z` results.
pub fn dynamic_layer_recursion(b: &BranchingVector, params: &ChannelParams) -> DynamicLayerStats {
    let d = b.depth();
    let br = b.branches();
    let eta2 = params.eta * params.eta;
    let (eps_bsm, err_dzz) = (params.eps_bsm(), params.err_dzz());

    let mut z = static_layer_recursion(b, params, Basis::Z);
    static_error_recursion(b, params, &mut z);
    let pr_i_z = z.pr_i;
    let err_i_z = z.err_i;

    let zero = || vec![0.0; d + 1];
    let (mut pr_s_c, mut err_s_c, mut pr_i_c, mut err_i_c) = (zero(), zero(), zero(), zero());
    let (mut pr_i_f, mut err_i_f, mut pr_m) = (zero(), zero(), zero());
    let (mut err_m_c, mut err_m_p, mut err_m_f) = (zero(), zero(), zero());

    for k in (0..=d).rev() {
        // Both sides recovered singly; the pair parity is wrong if exactly
        // one side is.
        pr_i_f[k] = pr_i_z[k] * pr_i_z[k];
        err_i_f[k] = 2.0 * err_i_z[k] * (1.0 - err_i_z[k]);
        pr_m[k] = eta2 + (1.0 - eta2) * pr_i_f[k];

        if k < d {
            if k + 1 == d {
                pr_s_c[k] = eta2 / 2.0;
                err_s_c[k] = eps_bsm;
            } else {
                let bb = br[k + 1];
                pr_s_c[k] = eta2 / 2.0 * pr_m[k + 2].powi(bb as i32);
                // Average the parity error over the grandchildren's outcome
                // mix, weighted by the chance that mix is fully recovered.
                let (mut num, mut den) = (0.0, 0.0);
                for m in OutcomeCounts::enumerate(bb) {
                    let w = outcome_probability(m, params) * pr_i_f[k + 2].powi(m.failed as i32);
                    if w == 0.0 {
                        continue;
                    }
                    num += w * odd_parity(&[
                        (eps_bsm, 1),
                        (err_m_c[k + 2], m.complete),
                        (err_m_p[k + 2], m.partial),
                        (err_m_f[k + 2], m.failed),
                    ]);
                    den += w;
                }
                err_s_c[k] = cond(num, den);
            }
            pr_i_c[k] = at_least_one(pr_s_c[k], br[k]);
            let weighted: f64 = (1..=br[k])
                .map(|m| binomial_pmf(br[k], m, pr_s_c[k]) * vote_error(m, err_s_c[k]))
                .sum();
            err_i_c[k] = cond(weighted, pr_i_c[k]);
        }

        // Indirect results are preferred whenever they exist.
        err_m_c[k] = pr_i_c[k] * err_i_c[k] + (1.0 - pr_i_c[k]) * err_dzz;
        err_m_p[k] = pr_i_f[k] * err_i_f[k] + (1.0 - pr_i_f[k]) * err_dzz;
        err_m_f[k] = err_i_f[k];
    }

    DynamicLayerStats {
        pr_i_z,
        err_i_z,
        pr_s_c,
        err_s_c,
        pr_i_c,
        err_i_c,
        pr_i_p: pr_i_f.clone(),
        err_i_p: err_i_f.clone(),
        pr_i_f,
        err_i_f,
        pr_m,
        err_m_c,
        err_m_p,
        err_m_f,
    }
}

fn child_recovery(b: &BranchingVector, pr_m: &[f64]) -> f64 {
    match b.branch(1) {
        Some(b1) => pr_m[2].powi(b1 as i32),
        None => 1.0,
    }
}

/// Dynamic (adaptive) protocol.
pub fn dynamic_logical_bsm(b: &BranchingVector, params: &ChannelParams) -> LogicalBsmResult {
    let s = dynamic_layer_recursion(b, params);
    let b0 = b.branches()[0];
    let eta2 = params.eta * params.eta;
    let q = child_recovery(b, &s.pr_m);
    let pr_complete = top_level_complete(b0, s.pr_m[1], q, params.eta);

    let e1 = cond(
        eta2 / 2.0 * s.err_m_c[1]
            + eta2 / 2.0 * s.err_m_p[1]
            + (1.0 - eta2) * s.pr_i_f[1] * s.err_m_f[1],
        s.pr_m[1],
    );
    let err_zz = odd_parity(&[(e1, b0)]);
    let err_xx = s.err_i_c[0];
    LogicalBsmResult {
        protocol: Protocol::Dynamic,
        pr_xx: s.pr_i_c[0],
        pr_zz: s.pr_m[1].powi(b0 as i32),
        pr_complete,
        err_xx,
        err_zz,
        err_complete: err_zz + (1.0 - err_zz) * err_xx,
    }
}

/// Success probability of the dynamic protocol without error bookkeeping.
pub fn dynamic_pr_complete(b: &BranchingVector, params: &ChannelParams) -> f64 {
    let d = b.depth();
    let z = static_layer_recursion(b, params, Basis::Z);
    let eta2 = params.eta * params.eta;
    let pr_m: Vec<f64> = (0..=d)
        .map(|k| eta2 + (1.0 - eta2) * z.pr_i[k] * z.pr_i[k])
        .collect();
    top_level_complete(b.branches()[0], pr_m[1], child_recovery(b, &pr_m), params.eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::static_logical_bsm;
    use approx::assert_abs_diff_eq;

    fn bv(s: &str) -> BranchingVector {
        s.parse().unwrap()
    }

    fn params(eta: f64, eps: f64) -> ChannelParams {
        ChannelParams::new(eta, eps).unwrap()
    }

    #[test]
    fn lossless_star() {
        let r = dynamic_logical_bsm(&bv("2"), &params(1.0, 0.0));
        assert_abs_diff_eq!(r.pr_complete, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn fast_path_agrees() {
        for b in ["1", "2,2", "4,2,1", "15,15,2"] {
            for eta in [0.5, 0.8, 0.99] {
                let p = params(eta, 0.001);
                assert_abs_diff_eq!(
                    dynamic_logical_bsm(&bv(b), &p).pr_complete,
                    dynamic_pr_complete(&bv(b), &p),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn depth_two_matches_static_when_no_grandchildren_matter() {
        // With depth 1 the two protocols coincide: nothing below level 1.
        for eta in [0.4, 0.9] {
            let p = params(eta, 0.003);
            let s = static_logical_bsm(&bv("3"), &p);
            let d = dynamic_logical_bsm(&bv("3"), &p);
            assert_abs_diff_eq!(s.pr_complete, d.pr_complete, epsilon = 1e-14);
            assert_abs_diff_eq!(s.err_complete, d.err_complete, epsilon = 1e-14);
        }
    }

    #[test]
    fn adaptive_beats_static_under_loss() {
        let p = params(0.6, 0.0);
        let s = static_logical_bsm(&bv("15,15,2"), &p);
        let d = dynamic_logical_bsm(&bv("15,15,2"), &p);
        assert!(d.pr_complete > s.pr_complete + 0.05);
    }

    #[test]
    fn milestone_tree_corrects_errors() {
        let p = params(0.95, 1e-5);
        let r = dynamic_logical_bsm(&bv("15,15,2"), &p);
        assert!(r.error_correcting(&p), "{} vs {}", r.err_complete, p.eps_bsm());
        assert!(r.loss_tolerant(&p));
    }

    #[test]
    fn conditioned_quantities_coincide() {
        let s = dynamic_layer_recursion(&bv("3,3,2"), &params(0.85, 0.01));
        assert_eq!(s.pr_i_p, s.pr_i_f);
        assert_eq!(s.err_i_p, s.err_i_f);
    }
}
