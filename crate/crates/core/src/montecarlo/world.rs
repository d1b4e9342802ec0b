//! One realization of every random ingredient: photon losses, BSM
//! completeness coins and Pauli faults.

use rand::Rng;

use crate::model::{BsmOutcome, ChannelParams};

/// Pauli fault letters, `0 = I, 1 = X, 2 = Y, 3 = Z`.
pub type Fault = u8;
pub const FAULT_I: Fault = 0;
pub const FAULT_X: Fault = 1;
pub const FAULT_Y: Fault = 2;
pub const FAULT_Z: Fault = 3;

/// Detection and fault of both photons of a pair, plus the BSM coin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairState {
    /// Detected flags for the photon in the first and second tree.
    pub detected: [bool; 2],
    /// BSM completeness coin, meaningful only when both are detected.
    pub complete_coin: bool,
    pub fault: [Fault; 2],
}

impl PairState {
    pub fn outcome(&self) -> BsmOutcome {
        match (self.detected, self.complete_coin) {
            ([true, true], true) => BsmOutcome::Complete,
            ([true, true], false) => BsmOutcome::Partial,
            _ => BsmOutcome::Failed,
        }
    }

    /// `ZZ'` flips when an odd number of the two faults are `X` or `Y`.
    pub fn zz_flip(&self) -> bool {
        self.fault.iter().filter(|&&f| f == FAULT_X || f == FAULT_Y).count() % 2 == 1
    }

    /// Raw `XX'` parity flip: an odd number of `Y` or `Z` faults.
    pub fn xx_parity_flip(&self) -> bool {
        self.fault.iter().filter(|&&f| f == FAULT_Y || f == FAULT_Z).count() % 2 == 1
    }

    /// A complete BSM reports the wrong Bell state unless both faults agree;
    /// its `XX'` reading is charged with that full error.
    pub fn xx_wrong(&self) -> bool {
        self.zz_flip() || self.xx_parity_flip()
    }

    /// Single-photon `Z` result on `side` is wrong under an `X` or `Y` fault.
    pub fn z_wrong(&self, side: usize) -> bool {
        matches!(self.fault[side], FAULT_X | FAULT_Y)
    }

    /// Single-photon `X` result on `side` is wrong under a `Y` or `Z` fault.
    pub fn x_wrong(&self, side: usize) -> bool {
        matches!(self.fault[side], FAULT_Y | FAULT_Z)
    }
}

/// Per-vertex pair states; index 0 (the root) is unused.
#[derive(Debug, Clone)]
pub struct World {
    pub pairs: Vec<PairState>,
}

fn draw_fault<R: Rng + ?Sized>(rng: &mut R, eps_d: f64) -> Fault {
    if eps_d <= 0.0 {
        return FAULT_I;
    }
    let u: f64 = rng.random();
    if u < eps_d {
        1 + ((u / eps_d * 3.0) as u8).min(2)
    } else {
        FAULT_I
    }
}

impl World {
    pub fn new(vertices: usize) -> Self {
        Self {
            pairs: vec![PairState::default(); vertices],
        }
    }

    /// Redraws every pair in place.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R, params: &ChannelParams) {
        let eps_d = params.eps_d();
        for p in self.pairs.iter_mut().skip(1) {
            p.detected = [rng.random_bool(params.eta), rng.random_bool(params.eta)];
            p.complete_coin = rng.random_bool(0.5);
            p.fault = [draw_fault(rng, eps_d), draw_fault(rng, eps_d)];
        }
    }
}

/// The five loss/coin states of a fault-free pair with their probabilities,
/// used for exhaustive enumeration.
pub fn pair_states(eta: f64) -> [(PairState, f64); 5] {
    let st = |a, b, c| PairState {
        detected: [a, b],
        complete_coin: c,
        fault: [FAULT_I, FAULT_I],
    };
    let miss = 1.0 - eta;
    [
        (st(false, false, false), miss * miss),
        (st(true, false, false), eta * miss),
        (st(false, true, false), miss * eta),
        (st(true, true, true), eta * eta / 2.0),
        (st(true, true, false), eta * eta / 2.0),
    ]
}
