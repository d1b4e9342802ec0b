//! Exact success and error probabilities of the logical Bell measurement.
//!
//! Every quantity is indexed by tree level `k = 0..=d`. At a level the
//! relevant events are
//!
//! * `D` — the qubit (or qubit pair) is measured directly,
//! * `S` — one child yields an indirect result (the child's complementary
//!   direct measurement plus all of its own children recovered),
//! * `I` — at least one child yields `S`,
//! * `M` — `D` or `I`.
//!
//! The Z-type basis `W` is either single-qubit `Z` (complement `X`) or the
//! pair parity `ZZ'` (complement `XX'`).

mod dynamic;
mod static_protocol;
mod threshold;

use serde::Serialize;
use thiserror::Error;

use crate::model::{BranchingVector, ChannelParams, Protocol};

pub use dynamic::{dynamic_layer_recursion, dynamic_logical_bsm, dynamic_pr_complete};
pub use static_protocol::{
    static_error_recursion, static_layer_recursion, static_logical_bsm, static_pr_complete,
};
pub use threshold::{find_threshold, find_threshold_with, ThresholdReport, BISECTION_MAX_ITERS};

/// Default comparison tolerance for probabilities.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("no closed-form evaluation exists for the {0} protocol")]
    NoClosedForm(Protocol),
    #[error("threshold family is empty")]
    EmptyFamily,
    #[error("target {target} is not reached by any tree in the family even at eta = 1")]
    UnreachableTarget { target: f64 },
    #[error("target must lie in (0, 1], got {0}")]
    InvalidTarget(f64),
}

/// Z-type measurement basis of a recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Basis {
    /// Single-qubit `Z`, supported by single-qubit `X` measurements.
    Z,
    /// Pair parity `ZZ'`, supported by `XX'` parities of complete BSMs.
    ZZ,
}

impl Basis {
    /// `(Pr[D_W], Pr[D_W~], E[D_W], E[D_W~])`.
    pub(crate) fn direct(self, params: &ChannelParams) -> (f64, f64, f64, f64) {
        let eta = params.eta;
        match self {
            Basis::Z => (eta, eta, params.eps, params.eps),
            Basis::ZZ => (
                eta * eta,
                eta * eta / 2.0,
                params.err_dzz(),
                params.err_dxx(),
            ),
        }
    }
}

/// Per-level probabilities and conditional error rates, indexed `0..=d`.
///
/// `pr_s`/`err_s` at the leaf level are unused and left at zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerStats {
    pub basis: Basis,
    pub pr_d: f64,
    pub err_d: f64,
    pub pr_s: Vec<f64>,
    pub pr_i: Vec<f64>,
    pub pr_m: Vec<f64>,
    pub err_s: Vec<f64>,
    pub err_i: Vec<f64>,
    pub err_m: Vec<f64>,
}

impl LayerStats {
    pub fn depth(&self) -> usize {
        self.pr_m.len() - 1
    }
}

/// Per-level quantities of the adaptive protocol, indexed `0..=d`.
///
/// The suffix names the outcome of the pair's own BSM: `c` complete, `p`
/// partial, `f` failed. Partial and failed pairs hand their children
/// single-qubit measurements, so their indirect quantities coincide.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicLayerStats {
    /// Indirect single-qubit `Z` on one side.
    pub pr_i_z: Vec<f64>,
    pub err_i_z: Vec<f64>,
    pub pr_s_c: Vec<f64>,
    pub err_s_c: Vec<f64>,
    pub pr_i_c: Vec<f64>,
    pub err_i_c: Vec<f64>,
    pub pr_i_p: Vec<f64>,
    pub err_i_p: Vec<f64>,
    pub pr_i_f: Vec<f64>,
    pub err_i_f: Vec<f64>,
    /// `ZZ'` known, directly or through the recovery its outcome allows.
    pub pr_m: Vec<f64>,
    /// `ZZ'` error given the pair's outcome and success.
    pub err_m_c: Vec<f64>,
    pub err_m_p: Vec<f64>,
    pub err_m_f: Vec<f64>,
}

/// Logical Bell measurement figures of merit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogicalBsmResult {
    pub protocol: Protocol,
    pub pr_xx: f64,
    pub pr_zz: f64,
    pub pr_complete: f64,
    pub err_xx: f64,
    pub err_zz: f64,
    pub err_complete: f64,
}

impl LogicalBsmResult {
    /// Beats the two-photon success bound `eta^2`.
    pub fn loss_tolerant(&self, params: &ChannelParams) -> bool {
        self.pr_complete > params.eta * params.eta
    }

    /// Beats the physical BSM error `3 eps (1 - eps)`.
    pub fn error_correcting(&self, params: &ChannelParams) -> bool {
        self.err_complete < params.eps_bsm()
    }
}

/// Full evaluation for a protocol with a closed form.
pub fn logical_bsm(
    protocol: Protocol,
    b: &BranchingVector,
    params: &ChannelParams,
) -> Result<LogicalBsmResult, AnalyticError> {
    match protocol {
        Protocol::Static => Ok(static_logical_bsm(b, params)),
        Protocol::Dynamic => Ok(dynamic_logical_bsm(b, params)),
        Protocol::LossOnly => Err(AnalyticError::NoClosedForm(protocol)),
    }
}

/// Success probability only; cheaper than [`logical_bsm`] for the dynamic case.
pub fn pr_complete(
    protocol: Protocol,
    b: &BranchingVector,
    params: &ChannelParams,
) -> Result<f64, AnalyticError> {
    match protocol {
        Protocol::Static => Ok(static_pr_complete(b, params)),
        Protocol::Dynamic => Ok(dynamic_pr_complete(b, params)),
        Protocol::LossOnly => Err(AnalyticError::NoClosedForm(protocol)),
    }
}

/// `Pr` that a group of `b0` level-1 pairs yields `Z_L Z_L'` and at least one
/// complete pair with all children recovered, given per-pair `ZZ'` success
/// `pr_m1` and child-recovery probability `q`.
///
/// Summing the outcome multinomial gives `pr_m1^b0 - (pr_m1 - eta^2 q / 2)^b0`.
pub(crate) fn top_level_complete(b0: usize, pr_m1: f64, q: f64, eta: f64) -> f64 {
    let half = eta * eta / 2.0;
    pr_m1.powi(b0 as i32) - (pr_m1 - half * q).max(0.0).powi(b0 as i32)
}
