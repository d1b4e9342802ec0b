//! Trees, channel parameters and the physical two-photon measurement model.
//!
//! Vertices are numbered breadth-first starting at the root (vertex 0). Every
//! engine in this crate (recursions, samplers, tableaux, generation sequences)
//! uses this numbering, so a vertex index means the same photon everywhere.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default upper bound on the number of vertices [`build_tree`] will materialize.
pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("branching vector must have at least one level")]
    EmptyBranchingVector,
    #[error("branching factor at level {level} is zero; every level needs b_k >= 1")]
    ZeroBranch { level: usize },
    #[error("cannot parse branching vector {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("tree has {count} vertices which exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: usize },
    #[error("{name} = {value} is not a probability in [0, 1]")]
    NotAProbability { name: &'static str, value: f64 },
}

/// Per-level branching numbers `(b_0, ..., b_{d-1})` of a tree graph state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BranchingVector(Vec<usize>);

impl BranchingVector {
    pub fn new(branches: Vec<usize>) -> Result<Self, ModelError> {
        if branches.is_empty() {
            return Err(ModelError::EmptyBranchingVector);
        }
        if let Some(level) = branches.iter().position(|&b| b == 0) {
            return Err(ModelError::ZeroBranch { level });
        }
        Ok(Self(branches))
    }

    /// Tree depth `d`.
    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn branches(&self) -> &[usize] {
        &self.0
    }

    /// Branching factor at `level`, or `None` for the leaf level and below.
    pub fn branch(&self, level: usize) -> Option<usize> {
        self.0.get(level).copied()
    }

    /// Number of vertices on each level, root level first (length `d + 1`).
    pub fn level_sizes(&self) -> Vec<u128> {
        let mut sizes = Vec::with_capacity(self.0.len() + 1);
        let mut width: u128 = 1;
        sizes.push(width);
        for &b in &self.0 {
            width = width.saturating_mul(b as u128);
            sizes.push(width);
        }
        sizes
    }

    /// Photons in one tree, root included: `1 + sum_k prod_{j<=k} b_j`.
    pub fn photon_count(&self) -> u128 {
        self.level_sizes()
            .iter()
            .fold(0u128, |acc, &w| acc.saturating_add(w))
    }
}

/// Total photon count of a tree, see [`BranchingVector::photon_count`].
pub fn photon_count(b: &BranchingVector) -> u128 {
    b.photon_count()
}

impl TryFrom<Vec<usize>> for BranchingVector {
    type Error = ModelError;

    fn try_from(value: Vec<usize>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<BranchingVector> for Vec<usize> {
    fn from(value: BranchingVector) -> Self {
        value.0
    }
}

impl fmt::Display for BranchingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for BranchingVector {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = |reason: String| ModelError::Parse {
            input: s.to_string(),
            reason,
        };
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        if trimmed.is_empty() {
            return Err(ModelError::EmptyBranchingVector);
        }
        let branches = trimmed
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|e| parse_err(format!("{tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(branches)
    }
}

/// Materialized rooted tree with breadth-first vertex numbering.
#[derive(Debug, Clone)]
pub struct TreeGraph {
    branching: BranchingVector,
    parent: Vec<Option<usize>>,
    level: Vec<usize>,
    first_child: Vec<usize>,
    child_count: Vec<usize>,
    level_start: Vec<usize>,
}

impl TreeGraph {
    pub fn branching(&self) -> &BranchingVector {
        &self.branching
    }

    pub fn depth(&self) -> usize {
        self.branching.depth()
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn level(&self, v: usize) -> usize {
        self.level[v]
    }

    /// Children of `v` (a contiguous index range thanks to breadth-first numbering).
    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        self.first_child[v]..self.first_child[v] + self.child_count[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.child_count[v] == 0
    }

    /// Neighbors `N_v`: children plus the parent, if any.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.parent[v]
            .into_iter()
            .chain(self.children(v))
            .collect()
    }

    /// Vertices at `level`.
    pub fn level_vertices(&self, level: usize) -> std::ops::Range<usize> {
        self.level_start[level]..self.level_start[level + 1]
    }

    /// Undirected edges as `(parent, child)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (p, v)))
    }
}

/// Builds the tree for `b`, refusing trees larger than `cap` vertices.
pub fn build_tree_capped(b: &BranchingVector, cap: usize) -> Result<TreeGraph, ModelError> {
    let count = b.photon_count();
    if count > cap as u128 {
        return Err(ModelError::TooLarge { count, cap });
    }
    let n = count as usize;
    let sizes = b.level_sizes();
    let mut level_start = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0usize;
    for &s in &sizes {
        level_start.push(acc);
        acc += s as usize;
    }
    level_start.push(acc);

    let mut parent = vec![None; n];
    let mut level = vec![0; n];
    let mut first_child = vec![n; n];
    let mut child_count = vec![0; n];
    for k in 0..b.depth() {
        let bk = b.branches()[k];
        for (i, v) in (level_start[k]..level_start[k + 1]).enumerate() {
            let start = level_start[k + 1] + i * bk;
            first_child[v] = start;
            child_count[v] = bk;
            for c in start..start + bk {
                parent[c] = Some(v);
                level[c] = k + 1;
            }
        }
    }
    Ok(TreeGraph {
        branching: b.clone(),
        parent,
        level,
        first_child,
        child_count,
        level_start,
    })
}

pub fn build_tree(b: &BranchingVector) -> Result<TreeGraph, ModelError> {
    build_tree_capped(b, DEFAULT_VERTEX_CAP)
}

/// Photon detection efficiency and single-qubit measurement error rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub eta: f64,
    pub eps: f64,
}

impl ChannelParams {
    pub fn new(eta: f64, eps: f64) -> Result<Self, ModelError> {
        for (name, value) in [("eta", eta), ("eps", eps)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::NotAProbability { name, value });
            }
        }
        Ok(Self { eta, eps })
    }

    pub fn lossless() -> Self {
        Self { eta: 1.0, eps: 0.0 }
    }

    /// Depolarizing probability, `3 eps / 2`.
    pub fn eps_d(&self) -> f64 {
        1.5 * self.eps
    }

    /// Error rate of a full two-photon BSM, `3 eps (1 - eps)`.
    pub fn eps_bsm(&self) -> f64 {
        3.0 * self.eps * (1.0 - self.eps)
    }

    /// Error of the `ZZ'` outcome of a two-photon BSM.
    pub fn err_dzz(&self) -> f64 {
        2.0 / 3.0 * self.eps_bsm()
    }

    /// Error of the `XX'` outcome; it also inherits `ZZ'` errors.
    pub fn err_dxx(&self) -> f64 {
        self.eps_bsm()
    }

    pub fn pr_complete(&self) -> f64 {
        self.eta * self.eta / 2.0
    }

    pub fn pr_partial(&self) -> f64 {
        self.eta * self.eta / 2.0
    }

    pub fn pr_failed(&self) -> f64 {
        1.0 - self.eta * self.eta
    }
}

/// Logical BSM strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// BSMs on every photon pair.
    Static,
    /// Children get BSMs only below complete parent BSMs, single-qubit
    /// measurements otherwise.
    Dynamic,
    /// BSMs on level-1 pairs only, single-qubit measurements everywhere below.
    LossOnly,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Static => "static",
            Protocol::Dynamic => "dynamic",
            Protocol::LossOnly => "loss-only",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "static" => Ok(Protocol::Static),
            "dynamic" => Ok(Protocol::Dynamic),
            "loss-only" | "loss_only" | "lossonly" => Ok(Protocol::LossOnly),
            other => Err(ModelError::Parse {
                input: other.to_string(),
                reason: "expected static, dynamic or loss-only".into(),
            }),
        }
    }
}

/// Result class of one linear-optical two-photon Bell measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BsmOutcome {
    /// Both `ZZ'` and `XX'` measured.
    Complete,
    /// Only `ZZ'` measured.
    Partial,
    /// At least one photon lost, nothing measured.
    Failed,
}

impl BsmOutcome {
    pub fn probability(self, params: &ChannelParams) -> f64 {
        match self {
            BsmOutcome::Complete => params.pr_complete(),
            BsmOutcome::Partial => params.pr_partial(),
            BsmOutcome::Failed => params.pr_failed(),
        }
    }

    /// `ZZ'` is known after this outcome.
    pub fn has_zz(self) -> bool {
        !matches!(self, BsmOutcome::Failed)
    }

    pub fn has_xx(self) -> bool {
        matches!(self, BsmOutcome::Complete)
    }
}

/// Numbers of complete, partial and failed BSMs within a sibling group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutcomeCounts {
    pub complete: usize,
    pub partial: usize,
    pub failed: usize,
}

impl OutcomeCounts {
    pub fn new(complete: usize, partial: usize, failed: usize) -> Self {
        Self {
            complete,
            partial,
            failed,
        }
    }

    pub fn total(&self) -> usize {
        self.complete + self.partial + self.failed
    }

    /// All `(m_c, m_p, m_f)` summing to `group_size`, with `m_c` outermost.
    pub fn enumerate(group_size: usize) -> impl Iterator<Item = OutcomeCounts> {
        (0..=group_size).flat_map(move |c| {
            (0..=group_size - c).map(move |p| OutcomeCounts::new(c, p, group_size - c - p))
        })
    }
}

/// Multinomial probability of a sibling group showing `counts`.
pub fn outcome_probability(counts: OutcomeCounts, params: &ChannelParams) -> f64 {
    let coef = crate::combinatorics::multinomial(counts.complete, counts.partial, counts.failed);
    let half = params.pr_complete();
    coef * half.powi((counts.complete + counts.partial) as i32)
        * params.pr_failed().powi(counts.failed as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bv(s: &str) -> BranchingVector {
        s.parse().unwrap()
    }

    #[test]
    fn photon_count_milestones() {
        assert_eq!(photon_count(&bv("2,2")), 7);
        assert_eq!(photon_count(&bv("15,15,2")), 691);
        assert_eq!(photon_count(&bv("74,15")), 1185);
        assert_eq!(photon_count(&bv("1")), 2);
    }

    #[test]
    fn parse_and_display() {
        let b = bv(" 15, 15,2 ");
        assert_eq!(b.branches(), &[15, 15, 2]);
        assert_eq!(b.to_string(), "15,15,2");
        assert_eq!(bv("(3,2)").branches(), &[3, 2]);
        assert!(matches!(
            "".parse::<BranchingVector>(),
            Err(ModelError::EmptyBranchingVector)
        ));
        assert!(matches!(
            "2,0".parse::<BranchingVector>(),
            Err(ModelError::ZeroBranch { level: 1 })
        ));
        assert!(matches!(
            "2,x".parse::<BranchingVector>(),
            Err(ModelError::Parse { .. })
        ));
    }

    #[test]
    fn star_tree() {
        let t = build_tree(&bv("2")).unwrap();
        assert_eq!(t.vertex_count(), 3);
        assert_eq!(t.children(0), 1..3);
        assert!(t.is_leaf(1) && t.is_leaf(2));
        assert_eq!(t.neighbors(1), vec![0]);
    }

    #[test]
    fn two_level_tree_layout() {
        let t = build_tree(&bv("2,2")).unwrap();
        assert_eq!(t.vertex_count(), 7);
        let widths: Vec<usize> = (0..=2).map(|k| t.level_vertices(k).len()).collect();
        assert_eq!(widths, vec![1, 2, 4]);
        assert_eq!(t.children(1), 3..5);
        assert_eq!(t.children(2), 5..7);
        assert_eq!(t.parent(6), Some(2));
        assert_eq!(t.neighbors(2), vec![0, 5, 6]);
    }

    #[test]
    fn figure_tree_shape() {
        let t = build_tree(&bv("3,2")).unwrap();
        assert_eq!(t.vertex_count(), 10);
        for v in t.level_vertices(1) {
            assert_eq!(t.children(v).len(), 2);
        }
        assert_eq!(t.edges().count(), 9);
    }

    #[test]
    fn cap_is_enforced() {
        let err = build_tree_capped(&bv("10,10,10"), 1000).unwrap_err();
        assert_eq!(
            err,
            ModelError::TooLarge {
                count: 1111,
                cap: 1000
            }
        );
        assert!(err.to_string().contains("1000"));
    }

    #[test]
    fn derived_error_rates() {
        let p = ChannelParams::new(0.9, 0.01).unwrap();
        assert_abs_diff_eq!(p.eps_bsm(), 0.0297, epsilon = 1e-15);
        assert_abs_diff_eq!(p.err_dzz(), 0.0198, epsilon = 1e-15);
        let ed = p.eps_d();
        assert_abs_diff_eq!(p.eps_bsm(), 2.0 * ed - 4.0 / 3.0 * ed * ed, epsilon = 1e-12);
        assert!(ChannelParams::new(1.2, 0.0).is_err());
        assert!(ChannelParams::new(0.5, -0.1).is_err());
    }

    #[test]
    fn outcome_probability_examples() {
        let lossless = ChannelParams::lossless();
        assert_abs_diff_eq!(
            outcome_probability(OutcomeCounts::new(2, 0, 0), &lossless),
            0.25,
            epsilon = 1e-15
        );
        let p = ChannelParams::new(0.9, 0.0).unwrap();
        assert_abs_diff_eq!(
            outcome_probability(OutcomeCounts::new(1, 1, 0), &p),
            0.32805,
            epsilon = 1e-12
        );
        let p = ChannelParams::new(0.95, 0.0).unwrap();
        let total: f64 = OutcomeCounts::enumerate(15)
            .map(|c| outcome_probability(c, &p))
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn outcome_marginals() {
        let p = ChannelParams::new(0.7, 0.0).unwrap();
        let sum: f64 = [BsmOutcome::Complete, BsmOutcome::Partial, BsmOutcome::Failed]
            .iter()
            .map(|o| o.probability(&p))
            .sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(BsmOutcome::Complete.probability(&p), 0.245, epsilon = 1e-15);
    }
}
