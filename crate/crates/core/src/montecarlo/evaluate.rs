//! Decision procedures of the three protocols, evaluated on one [`World`].
//!
//! Every procedure returns, for each logical parity, `None` if it could not be
//! obtained and `Some(wrong)` otherwise. Indirect results are preferred over
//! direct ones and combined by majority vote; an even number of votes first
//! drops one at random.

use rand::Rng;

use crate::model::{BsmOutcome, Protocol, TreeGraph};

use super::world::World;

/// Logical `X_L X_L'` and `Z_L Z_L'` results of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogicalOutcome {
    pub x: Option<bool>,
    pub z: Option<bool>,
}

impl LogicalOutcome {
    pub fn complete(&self) -> Option<bool> {
        let (x, z) = (self.x?, self.z?);
        Some(x || z)
    }
}

const BSM: u8 = 1;
const SINGLE_X: u8 = 2;
const SINGLE_Z: u8 = 3;

/// Evaluates `protocol` on `world`. `audit` is scratch space (resized as
/// needed) for the tripwire that no photon is read in two different bases.
pub fn evaluate<R: Rng + ?Sized>(
    protocol: Protocol,
    tree: &TreeGraph,
    world: &World,
    rng: &mut R,
    audit: &mut Vec<u8>,
) -> LogicalOutcome {
    audit.clear();
    audit.resize(2 * tree.vertex_count(), 0);
    let mut ev = Evaluator {
        tree,
        world,
        rng,
        audit,
    };
    match protocol {
        Protocol::Static => ev.static_logical(),
        Protocol::Dynamic => ev.dynamic_logical(),
        Protocol::LossOnly => ev.loss_only_logical(),
    }
}

struct Evaluator<'a, R: ?Sized> {
    tree: &'a TreeGraph,
    world: &'a World,
    rng: &'a mut R,
    audit: &'a mut Vec<u8>,
}

/// Running majority vote: `m` results, `k` of them wrong.
#[derive(Default)]
struct Vote {
    m: usize,
    k: usize,
}

impl Vote {
    fn add(&mut self, wrong: bool) {
        self.m += 1;
        self.k += wrong as usize;
    }

    fn result<R: Rng + ?Sized>(self, rng: &mut R) -> Option<bool> {
        let (mut m, mut k) = (self.m, self.k);
        if m == 0 {
            return None;
        }
        if m % 2 == 0 {
            if rng.random_range(0..m) < k {
                k -= 1;
            }
            m -= 1;
        }
        Some(2 * k > m)
    }
}

impl<R: Rng + ?Sized> Evaluator<'_, R> {
    fn touch(&mut self, side: usize, v: usize, basis: u8) {
        let slot = &mut self.audit[2 * v + side];
        assert!(
            *slot == 0 || *slot == basis,
            "photon {v} of tree {side} required in two bases ({} and {basis})",
            *slot
        );
        *slot = basis;
    }

    fn bsm(&mut self, v: usize) -> BsmOutcome {
        self.touch(0, v, BSM);
        self.touch(1, v, BSM);
        self.world.pairs[v].outcome()
    }

    // ---- static: BSMs everywhere ----

    fn static_zz(&mut self, v: usize) -> Option<bool> {
        let mut vote = Vote::default();
        for w in self.tree.children(v) {
            if let Some(e) = self.static_single(w) {
                vote.add(e);
            }
        }
        if let Some(e) = vote.result(self.rng) {
            return Some(e);
        }
        match self.bsm(v) {
            BsmOutcome::Failed => None,
            _ => Some(self.world.pairs[v].zz_flip()),
        }
    }

    /// `XX'` of complete child `w` times the `ZZ'` of all of its children.
    fn static_single(&mut self, w: usize) -> Option<bool> {
        if self.bsm(w) != BsmOutcome::Complete {
            return None;
        }
        let mut parity = self.world.pairs[w].xx_wrong();
        for u in self.tree.children(w) {
            parity ^= self.static_zz(u)?;
        }
        Some(parity)
    }

    fn static_logical(&mut self) -> LogicalOutcome {
        let root = self.tree.root();
        let x = {
            let mut vote = Vote::default();
            for w in self.tree.children(root) {
                if let Some(e) = self.static_single(w) {
                    vote.add(e);
                }
            }
            vote.result(self.rng)
        };
        let z = self.level_one_parity(|ev, v| ev.static_zz(v));
        LogicalOutcome { x, z }
    }

    fn level_one_parity(
        &mut self,
        mut zz: impl FnMut(&mut Self, usize) -> Option<bool>,
    ) -> Option<bool> {
        let mut parity = false;
        for v in self.tree.children(self.tree.root()) {
            parity ^= zz(self, v)?;
        }
        Some(parity)
    }

    // ---- single-photon chains ----

    /// Indirect `Z` of photon `v` on `side`: `X` on a child, `Z` on all of
    /// that child's children.
    fn z_indirect(&mut self, side: usize, v: usize) -> Option<bool> {
        let mut vote = Vote::default();
        for w in self.tree.children(v) {
            self.touch(side, w, SINGLE_X);
            if !self.world.pairs[w].detected[side] {
                continue;
            }
            let mut parity = self.world.pairs[w].x_wrong(side);
            let mut ok = true;
            for u in self.tree.children(w) {
                match self.z_any(side, u) {
                    Some(e) => parity ^= e,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                vote.add(parity);
            }
        }
        vote.result(self.rng)
    }

    /// `Z` of photon `u` on `side`, indirect if possible, else direct.
    fn z_any(&mut self, side: usize, u: usize) -> Option<bool> {
        if let Some(e) = self.z_indirect(side, u) {
            return Some(e);
        }
        self.touch(side, u, SINGLE_Z);
        let p = &self.world.pairs[u];
        p.detected[side].then(|| p.z_wrong(side))
    }

    // ---- dynamic: BSMs below complete pairs, single photons otherwise ----

    fn dynamic_zz(&mut self, v: usize) -> Option<bool> {
        match self.bsm(v) {
            BsmOutcome::Complete => {
                let mut vote = Vote::default();
                for w in self.tree.children(v) {
                    if let Some(e) = self.dynamic_single(w) {
                        vote.add(e);
                    }
                }
                Some(
                    vote.result(self.rng)
                        .unwrap_or_else(|| self.world.pairs[v].zz_flip()),
                )
            }
            BsmOutcome::Partial => {
                let a = self.z_indirect(0, v);
                let b = self.z_indirect(1, v);
                match (a, b) {
                    (Some(a), Some(b)) => Some(a ^ b),
                    _ => Some(self.world.pairs[v].zz_flip()),
                }
            }
            BsmOutcome::Failed => {
                let a = self.z_indirect(0, v);
                let b = self.z_indirect(1, v);
                Some(a? ^ b?)
            }
        }
    }

    fn dynamic_single(&mut self, w: usize) -> Option<bool> {
        if self.bsm(w) != BsmOutcome::Complete {
            return None;
        }
        let mut parity = self.world.pairs[w].xx_wrong();
        for u in self.tree.children(w) {
            parity ^= self.dynamic_zz(u)?;
        }
        Some(parity)
    }

    fn dynamic_logical(&mut self) -> LogicalOutcome {
        let root = self.tree.root();
        let mut vote = Vote::default();
        for w in self.tree.children(root) {
            if let Some(e) = self.dynamic_single(w) {
                vote.add(e);
            }
        }
        let x = vote.result(self.rng);
        let z = self.level_one_parity(|ev, v| ev.dynamic_zz(v));
        LogicalOutcome { x, z }
    }

    // ---- loss-only: BSMs on level 1, single photons below ----

    fn loss_only_logical(&mut self) -> LogicalOutcome {
        let root = self.tree.root();
        let mut vote = Vote::default();
        for w in self.tree.children(root) {
            if self.bsm(w) != BsmOutcome::Complete {
                continue;
            }
            let mut parity = self.world.pairs[w].xx_wrong();
            let mut ok = true;
            for u in self.tree.children(w) {
                match (self.z_any(0, u), self.z_any(1, u)) {
                    (Some(a), Some(b)) => parity ^= a ^ b,
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                vote.add(parity);
            }
        }
        let x = vote.result(self.rng);
        let z = self.level_one_parity(|ev, v| match ev.bsm(v) {
            BsmOutcome::Failed => {
                let a = ev.z_indirect(0, v);
                let b = ev.z_indirect(1, v);
                Some(a? ^ b?)
            }
            _ => Some(ev.world.pairs[v].zz_flip()),
        });
        LogicalOutcome { x, z }
    }
}
