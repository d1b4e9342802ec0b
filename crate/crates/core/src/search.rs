//! Branching-vector enumeration and Pareto fronts over photon count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{logical_bsm, AnalyticError};
use crate::model::{BranchingVector, ChannelParams, Protocol};

/// Resource bounds for [`enumerate_trees`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub max_depth: usize,
    pub max_branch: usize,
    pub max_photons: u128,
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self {
            max_depth: 4,
            max_branch: 80,
            max_photons: 2000,
        }
    }
}

/// Photon cap meaning "no cap" (kept within JSON's integer range).
pub const UNBOUNDED_PHOTONS: u128 = u64::MAX as u128;

impl SearchBounds {
    pub fn new(max_depth: usize, max_branch: usize, max_photons: u128) -> Self {
        Self {
            max_depth,
            max_branch,
            max_photons,
        }
    }

    /// Family used by the threshold finder when none is given: depth at most
    /// 3, at most 25 children per vertex, no photon cap.
    pub fn threshold_default() -> Self {
        Self::new(3, 25, UNBOUNDED_PHOTONS)
    }
}

/// Every branching vector within `bounds`, shortest first and
/// lexicographically within one depth.
pub fn enumerate_trees(bounds: SearchBounds) -> impl Iterator<Item = BranchingVector> {
    (1..=bounds.max_depth).flat_map(move |depth| {
        let mut out = Vec::new();
        let mut prefix = Vec::with_capacity(depth);
        fill(&bounds, depth, &mut prefix, 1, 1, &mut out);
        out.into_iter()
    })
}

fn fill(
    bounds: &SearchBounds,
    depth: usize,
    prefix: &mut Vec<usize>,
    photons: u128,
    level_size: u128,
    out: &mut Vec<BranchingVector>,
) {
    if prefix.len() == depth {
        out.push(BranchingVector::new(prefix.clone()).expect("branches are positive"));
        return;
    }
    // The deeper levels add at least one photon per vertex of this level.
    let remaining = (depth - prefix.len() - 1) as u128;
    for b in 1..=bounds.max_branch {
        let size = level_size.saturating_mul(b as u128);
        let n = photons
            .saturating_add(size)
            .saturating_add(size.saturating_mul(remaining));
        if n > bounds.max_photons {
            break;
        }
        prefix.push(b);
        fill(bounds, depth, prefix, photons + size, size, out);
        prefix.pop();
    }
}

/// Number of vectors [`enumerate_trees`] yields, without materializing them.
pub fn count_trees(bounds: SearchBounds) -> u64 {
    fn go(bounds: &SearchBounds, left: usize, photons: u128, level: u128) -> u64 {
        if left == 0 {
            return 1;
        }
        let mut total = 0;
        for b in 1..=bounds.max_branch {
            let size = level.saturating_mul(b as u128);
            let n = photons
                .saturating_add(size)
                .saturating_add(size.saturating_mul(left as u128 - 1));
            if n > bounds.max_photons {
                break;
            }
            total += go(bounds, left - 1, photons + size, size);
        }
        total
    }
    (1..=bounds.max_depth).map(|d| go(&bounds, d, 1, 1)).sum()
}

/// One evaluated tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoEntry {
    pub b: BranchingVector,
    pub n: u128,
    pub protocol: Protocol,
    pub eta: f64,
    pub eps: f64,
    pub pr_complete: f64,
    pub err_complete: f64,
    /// `pr_complete > eta^2`.
    pub loss_tolerant: bool,
    /// `err_complete < eps_bsm`.
    pub error_correcting: bool,
}

impl ParetoEntry {
    pub fn evaluate(
        b: &BranchingVector,
        params: &ChannelParams,
        protocol: Protocol,
    ) -> Result<Self, AnalyticError> {
        let r = logical_bsm(protocol, b, params)?;
        Ok(Self {
            b: b.clone(),
            n: b.photon_count(),
            protocol,
            eta: params.eta,
            eps: params.eps,
            pr_complete: r.pr_complete,
            err_complete: r.err_complete,
            loss_tolerant: r.loss_tolerant(params),
            error_correcting: r.error_correcting(params),
        })
    }

    pub const CSV_HEADER: &'static str =
        "b,n,protocol,eta,eps,pr_complete,err_complete,loss_tolerant,error_correcting";
}

/// Evaluates every tree within `bounds`; the result is ordered by photon
/// count, then by branching vector, regardless of the thread pool.
pub fn evaluate_all(
    bounds: SearchBounds,
    params: &ChannelParams,
    protocol: Protocol,
) -> Result<Vec<ParetoEntry>, AnalyticError> {
    let trees: Vec<BranchingVector> = enumerate_trees(bounds).collect();
    let mut entries = trees
        .par_iter()
        .map(|b| ParetoEntry::evaluate(b, params, protocol))
        .collect::<Result<Vec<_>, _>>()?;
    entries.sort_by(|a, b| a.n.cmp(&b.n).then_with(|| a.b.branches().cmp(b.b.branches())));
    Ok(entries)
}

/// Trees that beat every smaller tree, and the plain two-photon BSM, in
/// success probability or in error rate.
///
/// Trees sharing a photon count are compared only against strictly smaller
/// ones, so ties are all kept.
pub fn pareto_front(
    bounds: SearchBounds,
    params: &ChannelParams,
    protocol: Protocol,
) -> Result<Vec<ParetoEntry>, AnalyticError> {
    Ok(front_of(evaluate_all(bounds, params, protocol)?, params))
}

/// [`pareto_front`] over entries already sorted by photon count.
pub fn front_of(entries: Vec<ParetoEntry>, params: &ChannelParams) -> Vec<ParetoEntry> {
    let (mut best_pr, mut best_err) = (params.pr_complete(), params.eps_bsm());
    let mut front = Vec::new();
    let mut i = 0;
    while i < entries.len() {
        let n = entries[i].n;
        let j = entries[i..].iter().position(|e| e.n != n).map_or(entries.len(), |k| i + k);
        let (mut pr, mut err) = (best_pr, best_err);
        for e in &entries[i..j] {
            if e.pr_complete > best_pr || e.err_complete < best_err {
                front.push(e.clone());
            }
            pr = pr.max(e.pr_complete);
            err = err.min(e.err_complete);
        }
        (best_pr, best_err) = (pr, err);
        i = j;
    }
    front
}

/// Drops trees that cannot reach `target` at any `eta`: with no loss a tree
/// succeeds with `1 - 2^-b0`, an upper bound for every `eta`.
pub fn prune_for_target(
    trees: impl IntoIterator<Item = BranchingVector>,
    target: f64,
) -> Vec<BranchingVector> {
    trees
        .into_iter()
        .filter(|b| {
            let b0 = b.branches()[0].min(i32::MAX as usize) as i32;
            1.0 - 0.5f64.powi(b0) >= target
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(bounds: SearchBounds) -> Vec<String> {
        enumerate_trees(bounds).map(|b| b.to_string()).collect()
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(list(SearchBounds::new(1, 3, 10)), ["1", "2", "3"]);
        assert_eq!(
            list(SearchBounds::new(2, 2, 7)),
            ["1", "2", "1,1", "1,2", "2,1", "2,2"]
        );
    }

    #[test]
    fn photon_cap_is_respected() {
        let bounds = SearchBounds::new(3, 15, 691);
        let trees: Vec<_> = enumerate_trees(bounds).collect();
        assert!(trees.iter().all(|b| b.photon_count() <= 691));
        assert!(trees.iter().any(|b| b.to_string() == "15,15,2"));
        assert_eq!(trees.len() as u64, count_trees(bounds));
    }

    #[test]
    fn pruning_keeps_only_wide_roots() {
        let kept = prune_for_target(enumerate_trees(SearchBounds::new(2, 8, 100)), 0.99);
        assert!(kept.iter().all(|b| b.branches()[0] >= 7));
        assert!(!kept.is_empty());
    }

    #[test]
    fn front_rule() {
        let params = ChannelParams::new(0.9, 0.0).unwrap();
        let front = pareto_front(SearchBounds::new(2, 6, 30), &params, Protocol::Static).unwrap();
        assert!(!front.is_empty());
        // Without faults only success matters, so the front rises.
        for w in front.windows(2) {
            assert!(w[0].n <= w[1].n);
            if w[0].n < w[1].n {
                assert!(w[1].pr_complete > w[0].pr_complete);
            }
        }
        assert!(front[0].pr_complete > params.pr_complete());
    }
}
