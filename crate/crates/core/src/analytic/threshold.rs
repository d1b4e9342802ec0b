use rayon::prelude::*;
use serde::Serialize;

use crate::model::{BranchingVector, ChannelParams, Protocol};

use super::{pr_complete, AnalyticError};

/// Iteration cap for the bisection on `eta`.
pub const BISECTION_MAX_ITERS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub protocol: Protocol,
    pub target: f64,
    /// Midpoint of the final bracket.
    pub eta_star: f64,
    /// Largest `eta` known to miss the target.
    pub lower: f64,
    /// Smallest `eta` known to reach it.
    pub upper: f64,
    /// A tree reaching the target at `upper`.
    pub witness: BranchingVector,
    pub family_size: usize,
    pub iterations: usize,
}

/// Smallest `eta` (to within `tol`) at which some tree of `family` reaches
/// `pr_complete >= target`.
pub fn find_threshold(
    protocol: Protocol,
    family: &[BranchingVector],
    target: f64,
    tol: f64,
) -> Result<ThresholdReport, AnalyticError> {
    find_threshold_with(family, target, tol, |b, eta| {
        pr_complete(protocol, b, &ChannelParams { eta, eps: 0.0 })
    })
    .map(|mut r| {
        r.protocol = protocol;
        r
    })
}

/// Bisection core with a caller-supplied success function, so the search
/// logic can be exercised on synthetic curves.
pub fn find_threshold_with<F>(
    family: &[BranchingVector],
    target: f64,
    tol: f64,
    success: F,
) -> Result<ThresholdReport, AnalyticError>
where
    F: Fn(&BranchingVector, f64) -> Result<f64, AnalyticError> + Sync,
{
    if !(target > 0.0 && target <= 1.0) {
        return Err(AnalyticError::InvalidTarget(target));
    }
    if family.is_empty() {
        return Err(AnalyticError::EmptyFamily);
    }
    let witness_at = |eta: f64| -> Result<Option<BranchingVector>, AnalyticError> {
        // First hit in family order keeps the witness deterministic.
        let hits = family
            .par_iter()
            .map(|b| success(b, eta).map(|p| p >= target))
            .collect::<Result<Vec<bool>, _>>()?;
        Ok(hits.iter().position(|&h| h).map(|i| family[i].clone()))
    };

    let mut witness = witness_at(1.0)?.ok_or(AnalyticError::UnreachableTarget { target })?;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut iterations = 0;
    while hi - lo > tol && iterations < BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        match witness_at(mid)? {
            Some(w) => {
                hi = mid;
                witness = w;
            }
            None => lo = mid,
        }
        iterations += 1;
    }
    Ok(ThresholdReport {
        protocol: Protocol::Static,
        target,
        eta_star: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        witness,
        family_size: family.len(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BranchingVector {
        s.parse().unwrap()
    }

    #[test]
    fn synthetic_curve_bisects() {
        let fam = vec![bv("1")];
        let r = find_threshold_with(&fam, 0.5, 1e-6, |_, eta| Ok(eta * eta)).unwrap();
        assert!((r.eta_star - 0.5f64.sqrt()).abs() < 1e-6);
        assert!(r.lower < r.upper && r.upper - r.lower <= 1e-6);
    }

    #[test]
    fn single_child_cannot_reach_target() {
        for p in [Protocol::Static, Protocol::Dynamic] {
            assert_eq!(
                find_threshold(p, &[bv("1")], 0.99, 1e-3).unwrap_err(),
                AnalyticError::UnreachableTarget { target: 0.99 }
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            find_threshold(Protocol::Static, &[], 0.9, 1e-3).unwrap_err(),
            AnalyticError::EmptyFamily
        );
        assert!(matches!(
            find_threshold(Protocol::Static, &[bv("2")], 0.0, 1e-3),
            Err(AnalyticError::InvalidTarget(_))
        ));
        assert!(matches!(
            find_threshold(Protocol::LossOnly, &[bv("2")], 0.5, 1e-3),
            Err(AnalyticError::NoClosedForm(Protocol::LossOnly))
        ));
    }

    #[test]
    fn witness_reaches_target() {
        let fam = vec![bv("2"), bv("6,3"), bv("8,4")];
        let r = find_threshold(Protocol::Dynamic, &fam, 0.95, 1e-4).unwrap();
        let p = ChannelParams { eta: r.upper, eps: 0.0 };
        assert!(pr_complete(Protocol::Dynamic, &r.witness, &p).unwrap() >= 0.95);
        assert_eq!(r.protocol, Protocol::Dynamic);
    }
}
