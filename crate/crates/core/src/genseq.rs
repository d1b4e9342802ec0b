//! Matter-qubit instruction sequence that emits a logical Bell pair of two
//! tree-encoded photonic qubits, and its tableau verifier.
//!
//! The recursion (read right to left, stored here in execution order):
//!
//! ```text
//! Bell   = MX(Q0) MX(Q1) CZ(Q0,Q1) F(Q0) F(Q1)
//! F(Qi)  = [ MZ(Q2) H(Q2) E(Q2) CZ(Qi,Q2) G_2 ]^{b_0}
//! G_i    = [ MZ(Q_{i+1}) H(Q_{i+1}) E(Q_{i+1}) CZ(Q_i,Q_{i+1}) G_{i+1} ]^{b_{i-1}}   (2 <= i < d)
//! G_d    = E(Q_d)^{b_{d-1}}
//! ```
//!
//! `E(Q)` emits a fresh photon maximally entangled with `Q`; `MZ` measures the
//! matter qubit and re-initializes it to `|+>` for the next subtree.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{build_tree_capped, BranchingVector, ModelError, TreeGraph};
use crate::stabilizer::{
    first_difference, tree_code, MeasureMode, OutcomeChoice, Pauli, PauliString,
    StabilizerError, StabilizerTableau,
};

/// Default photon limit for tableau verification.
pub const DEFAULT_VERIFY_PHOTON_CAP: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenSeqError {
    #[error("instruction {index} ({instr}) references {what} {qubit}, but only {limit} exist")]
    OutOfRange {
        index: usize,
        instr: Instruction,
        what: &'static str,
        qubit: usize,
        limit: usize,
    },
    #[error("instruction {index} emits photon {photon}, expected {expected}")]
    PhotonOrder {
        index: usize,
        photon: usize,
        expected: usize,
    },
    #[error("sequence for {photons} photons exceeds the verification cap of {cap}")]
    TooLarge { photons: usize, cap: usize },
    #[error("cannot parse instruction line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Instruction {
    /// Emit photon `photon` from matter qubit `matter`.
    Emit { matter: usize, photon: usize },
    Hadamard(usize),
    MeasureX(usize),
    MeasureY(usize),
    MeasureZ(usize),
    Cz(usize, usize),
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instruction::Emit { matter, photon } => write!(f, "E {matter} {photon}"),
            Instruction::Hadamard(q) => write!(f, "H {q}"),
            Instruction::MeasureX(q) => write!(f, "MX {q}"),
            Instruction::MeasureY(q) => write!(f, "MY {q}"),
            Instruction::MeasureZ(q) => write!(f, "MZ {q}"),
            Instruction::Cz(a, b) => write!(f, "CZ {a} {b}"),
        }
    }
}

impl FromStr for Instruction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        let num = |i: usize| -> Result<usize, String> {
            toks.get(i)
                .ok_or_else(|| format!("missing operand {i}"))?
                .parse()
                .map_err(|e| format!("operand {i}: {e}"))
        };
        let (instr, arity) = match toks.first().copied() {
            Some("E") => (
                Instruction::Emit {
                    matter: num(1)?,
                    photon: num(2)?,
                },
                3,
            ),
            Some("H") => (Instruction::Hadamard(num(1)?), 2),
            Some("MX") => (Instruction::MeasureX(num(1)?), 2),
            Some("MY") => (Instruction::MeasureY(num(1)?), 2),
            Some("MZ") => (Instruction::MeasureZ(num(1)?), 2),
            Some("CZ") => (Instruction::Cz(num(1)?, num(2)?), 3),
            Some(op) => return Err(format!("unknown opcode {op:?}")),
            None => return Err("empty line".into()),
        };
        if toks.len() != arity {
            return Err(format!("expected {} operands", arity - 1));
        }
        Ok(instr)
    }
}

/// Instructions in execution order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstructionSequence {
    pub matter_qubits: usize,
    pub photons: usize,
    pub instructions: Vec<Instruction>,
}

impl InstructionSequence {
    /// Checks register bounds and strictly increasing photon indices.
    pub fn validate(&self) -> Result<(), GenSeqError> {
        let mut next_photon = 0;
        for (index, &instr) in self.instructions.iter().enumerate() {
            let matter: Vec<usize> = match instr {
                Instruction::Emit { matter, photon } => {
                    if photon >= self.photons {
                        return Err(GenSeqError::OutOfRange {
                            index,
                            instr,
                            what: "photon",
                            qubit: photon,
                            limit: self.photons,
                        });
                    }
                    if photon != next_photon {
                        return Err(GenSeqError::PhotonOrder {
                            index,
                            photon,
                            expected: next_photon,
                        });
                    }
                    next_photon += 1;
                    vec![matter]
                }
                Instruction::Hadamard(q)
                | Instruction::MeasureX(q)
                | Instruction::MeasureY(q)
                | Instruction::MeasureZ(q) => vec![q],
                Instruction::Cz(a, b) => vec![a, b],
            };
            if let Some(&q) = matter.iter().find(|&&q| q >= self.matter_qubits) {
                return Err(GenSeqError::OutOfRange {
                    index,
                    instr,
                    what: "matter qubit",
                    qubit: q,
                    limit: self.matter_qubits,
                });
            }
        }
        Ok(())
    }

    pub fn measurement_count(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| {
                matches!(
                    i,
                    Instruction::MeasureX(_) | Instruction::MeasureY(_) | Instruction::MeasureZ(_)
                )
            })
            .count()
    }

    /// Line format with a header comment carrying the register sizes.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# matter {} photons {}\n",
            self.matter_qubits, self.photons
        );
        for i in &self.instructions {
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output. Without a header the register
    /// sizes are inferred from the instructions.
    pub fn from_text(text: &str) -> Result<Self, GenSeqError> {
        let mut header = None;
        let mut instructions = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if let ["matter", m, "photons", p] = toks.as_slice() {
                    let parse = |s: &str| {
                        s.parse::<usize>().map_err(|e| GenSeqError::Parse {
                            line: i + 1,
                            reason: e.to_string(),
                        })
                    };
                    header = Some((parse(m)?, parse(p)?));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            instructions.push(line.parse().map_err(|reason| GenSeqError::Parse {
                line: i + 1,
                reason,
            })?);
        }
        let (matter_qubits, photons) = header.unwrap_or_else(|| infer_sizes(&instructions));
        Ok(Self {
            matter_qubits,
            photons,
            instructions,
        })
    }
}

fn infer_sizes(instrs: &[Instruction]) -> (usize, usize) {
    let mut matter = 0;
    let mut photons = 0;
    for &i in instrs {
        match i {
            Instruction::Emit { matter: m, photon } => {
                matter = matter.max(m + 1);
                photons = photons.max(photon + 1);
            }
            Instruction::Hadamard(q)
            | Instruction::MeasureX(q)
            | Instruction::MeasureY(q)
            | Instruction::MeasureZ(q) => matter = matter.max(q + 1),
            Instruction::Cz(a, b) => matter = matter.max(a.max(b) + 1),
        }
    }
    (matter, photons)
}

struct Compiler<'a> {
    b: &'a [usize],
    out: Vec<Instruction>,
    next_photon: usize,
    max_register: usize,
}

impl Compiler<'_> {
    fn emit(&mut self, matter: usize) {
        self.max_register = self.max_register.max(matter);
        self.out.push(Instruction::Emit {
            matter,
            photon: self.next_photon,
        });
        self.next_photon += 1;
    }

    /// Attaches `b[level]` subtrees to the vertex held by `parent`; the new
    /// children live on register `reg`, at tree level `level + 1`.
    fn subtrees(&mut self, parent: usize, reg: usize, level: usize) {
        let d = self.b.len();
        for _ in 0..self.b[level] {
            if level + 1 < d {
                self.children_of(reg, level + 1);
            }
            self.max_register = self.max_register.max(reg);
            self.out.push(Instruction::Cz(parent, reg));
            self.emit(reg);
            self.out.push(Instruction::Hadamard(reg));
            self.out.push(Instruction::MeasureZ(reg));
        }
    }

    /// `G` for a vertex at `level >= 1` held by register `reg`.
    fn children_of(&mut self, reg: usize, level: usize) {
        let d = self.b.len();
        if level + 1 == d {
            for _ in 0..self.b[level] {
                self.emit(reg);
            }
        } else {
            self.subtrees(reg, reg + 1, level);
        }
    }
}

/// Compiles the Bell-pair sequence for two trees of shape `b`. Register 0 and
/// 1 hold the two roots; level-`k` vertices (`k >= 1`) use register `k + 1`,
/// except that leaves are emitted straight from their parent's register.
pub fn compile_bell_pair(b: &BranchingVector) -> InstructionSequence {
    let mut c = Compiler {
        b: b.branches(),
        out: Vec::new(),
        next_photon: 0,
        max_register: 1,
    };
    // Rightmost factor runs first: F(Q1), then F(Q0).
    c.subtrees(1, 2, 0);
    c.subtrees(0, 2, 0);
    c.out.push(Instruction::Cz(0, 1));
    c.out.push(Instruction::MeasureX(1));
    c.out.push(Instruction::MeasureX(0));
    InstructionSequence {
        matter_qubits: c.max_register + 1,
        photons: c.next_photon,
        instructions: c.out,
    }
}

/// Which tree each emitted photon belongs to and which vertex it is, in
/// emission order (post-order, second tree first).
pub fn photon_layout(tree: &TreeGraph) -> Vec<(usize, usize)> {
    fn post(tree: &TreeGraph, v: usize, side: usize, out: &mut Vec<(usize, usize)>) {
        for c in tree.children(v) {
            post(tree, c, side, out);
        }
        out.push((side, v));
    }
    let mut out = Vec::new();
    for side in [1, 0] {
        for c in tree.children(tree.root()) {
            post(tree, c, side, &mut out);
        }
    }
    out
}

/// The target state: both tree codes plus `X_L Z_L'` and `Z_L X_L'`, on the
/// photon register laid out as in [`photon_layout`].
pub fn bell_pair_target(tree: &TreeGraph) -> StabilizerTableau {
    let layout = photon_layout(tree);
    let n = layout.len();
    let mut slot = vec![[0usize; 2]; tree.vertex_count()];
    for (i, &(side, v)) in layout.iter().enumerate() {
        slot[v][side] = i;
    }
    let a = tree_code(tree, n, |v| slot[v][0]);
    let b = tree_code(tree, n, |v| slot[v][1]);
    let mut gens = a.stabilizers.clone();
    gens.extend(b.stabilizers.iter().cloned());
    gens.push(a.logical_x.mul(&b.logical_z));
    gens.push(a.logical_z.mul(&b.logical_x));
    StabilizerTableau::from_generators(n, gens).expect("Bell-pair target is a valid state")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub equal: bool,
    pub instructions: usize,
    pub matter_qubits: usize,
    pub photons: usize,
    pub measurements: usize,
    /// Sign of every measurement, in execution order.
    pub outcomes: Vec<i8>,
    /// `(row, produced, expected)` of the first canonical mismatch.
    pub first_mismatch: Option<(usize, String, String)>,
    /// Problem found before the comparison (e.g. an entangled leftover register).
    pub note: Option<String>,
}

/// How random outcomes are chosen during verification.
pub enum OutcomePattern<'a> {
    /// Sign for the `i`-th measurement (cycled if shorter than the sequence).
    Forced(&'a [i8]),
    Seeded(u64),
}

/// Executes `seq` on a tableau, applies the Pauli-frame corrections and
/// compares the photons' state with [`bell_pair_target`].
pub fn verify_bell_pair(
    seq: &InstructionSequence,
    b: &BranchingVector,
    pattern: OutcomePattern<'_>,
) -> Result<VerifyReport, GenSeqError> {
    verify_bell_pair_capped(seq, b, pattern, DEFAULT_VERIFY_PHOTON_CAP)
}

pub fn verify_bell_pair_capped(
    seq: &InstructionSequence,
    b: &BranchingVector,
    pattern: OutcomePattern<'_>,
    photon_cap: usize,
) -> Result<VerifyReport, GenSeqError> {
    seq.validate()?;
    if seq.photons > photon_cap {
        return Err(GenSeqError::TooLarge {
            photons: seq.photons,
            cap: photon_cap,
        });
    }
    let tree = build_tree_capped(b, photon_cap + 1)?;
    let m = seq.matter_qubits;
    let n = m + seq.photons;
    let letters: Vec<Pauli> = (0..n)
        .map(|q| if q < m { Pauli::X } else { Pauli::Z })
        .collect();
    let mut t = StabilizerTableau::product_state(&letters);
    let mut rng = match pattern {
        OutcomePattern::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        OutcomePattern::Forced(_) => None,
    };
    let mut outcomes = Vec::new();
    let mut last_emitted: Vec<Option<usize>> = vec![None; m];
    let mut root_outcome = [1i8; 2];

    for &instr in &seq.instructions {
        match instr {
            Instruction::Emit { matter, photon } => {
                t.apply_cnot(matter, m + photon)?;
                last_emitted[matter] = Some(m + photon);
            }
            Instruction::Hadamard(q) => t.apply_h(q)?,
            Instruction::Cz(a, b) => t.apply_cz(a, b)?,
            Instruction::MeasureX(q) | Instruction::MeasureY(q) | Instruction::MeasureZ(q) => {
                let basis = match instr {
                    Instruction::MeasureX(_) => Pauli::X,
                    Instruction::MeasureY(_) => Pauli::Y,
                    _ => Pauli::Z,
                };
                let want = match (&pattern, rng.as_mut()) {
                    (OutcomePattern::Forced(signs), _) if !signs.is_empty() => {
                        signs[outcomes.len() % signs.len()]
                    }
                    (_, Some(r)) => {
                        if r.random_bool(0.5) {
                            1
                        } else {
                            -1
                        }
                    }
                    _ => 1,
                };
                let rec = t.measure(
                    q,
                    basis,
                    OutcomeChoice::Prefer(want),
                    MeasureMode::Destructive,
                )?;
                outcomes.push(rec.outcome);
                if q < 2 {
                    root_outcome[q] = rec.outcome;
                    continue;
                }
                // Byproduct of teleporting the register onto its photon.
                if rec.outcome < 0 {
                    if let Some(p) = last_emitted[q] {
                        t.apply_pauli(&PauliString::single(n, p, Pauli::Z))?;
                    }
                }
                // Fresh |+> for the next subtree.
                t.reactivate(q, Pauli::X)?;
            }
        }
    }

    let mut report = VerifyReport {
        equal: false,
        instructions: seq.instructions.len(),
        matter_qubits: m,
        photons: seq.photons,
        measurements: outcomes.len(),
        outcomes,
        first_mismatch: None,
        note: None,
    };

    // Idle registers must be unentangled |+> states; measure them away.
    for q in 0..m {
        if t.is_active(q) {
            let rec = t.measure(q, Pauli::X, OutcomeChoice::Prefer(1), MeasureMode::Destructive)?;
            if !rec.deterministic || rec.outcome != 1 {
                report.note = Some(format!("matter qubit {q} is still entangled at the end"));
                return Ok(report);
            }
        }
    }

    let photons: Vec<usize> = (m..n).collect();
    let mut state = match t.restrict(&photons) {
        Ok(s) => s,
        Err(e) => {
            report.note = Some(e.to_string());
            return Ok(report);
        }
    };

    let layout = photon_layout(&tree);
    let mut slot = vec![[0usize; 2]; tree.vertex_count()];
    for (i, &(side, v)) in layout.iter().enumerate() {
        slot[v][side] = i;
    }
    // Leaves emitted without the matter rotation sit in the conjugate basis.
    if tree.depth() >= 2 {
        for (i, &(_, v)) in layout.iter().enumerate() {
            if tree.is_leaf(v) {
                state.apply_h(i)?;
            }
        }
    }
    // Root measurements leave logical Pauli byproducts on the first tree;
    // the logicals are those of the target code, so this comes last.
    let code0 = tree_code(&tree, seq.photons, |v| slot[v][0]);
    if root_outcome[0] < 0 {
        state.apply_pauli(&code0.logical_x)?;
    }
    if root_outcome[1] < 0 {
        state.apply_pauli(&code0.logical_z)?;
    }

    let target = bell_pair_target(&tree);
    if target.num_qubits() != state.num_qubits() {
        report.note = Some(format!(
            "sequence produced {} photons, the target has {}",
            state.num_qubits(),
            target.num_qubits()
        ));
        return Ok(report);
    }
    report.first_mismatch = first_difference(&state, &target)?;
    report.equal = report.first_mismatch.is_none();
    Ok(report)
}

/// Outcome of [`verify_patterns`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternSweep {
    pub measurements: usize,
    /// Every sign pattern was tried, rather than a sample.
    pub exhaustive: bool,
    pub patterns: usize,
    pub passed: usize,
    /// Signs of the first failing pattern and its report.
    pub first_failure: Option<(Vec<i8>, VerifyReport)>,
}

impl PatternSweep {
    pub fn all_passed(&self) -> bool {
        self.passed == self.patterns
    }
}

/// Most measurements for which [`verify_patterns`] tries every sign pattern.
pub const EXHAUSTIVE_PATTERN_LIMIT: usize = 12;

/// Verifies `seq` under forced measurement outcomes: all `2^M` sign patterns
/// when `M <= EXHAUSTIVE_PATTERN_LIMIT`, otherwise all `+1`, all `-1` and
/// `random` patterns drawn from `seed`.
pub fn verify_patterns(
    seq: &InstructionSequence,
    b: &BranchingVector,
    random: usize,
    seed: u64,
) -> Result<PatternSweep, GenSeqError> {
    let m = seq.measurement_count();
    let exhaustive = m <= EXHAUSTIVE_PATTERN_LIMIT;
    let patterns: Vec<Vec<i8>> = if exhaustive {
        (0..1u32 << m)
            .map(|bits| (0..m).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect())
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![vec![1; m], vec![-1; m]];
        for _ in 0..random {
            out.push((0..m).map(|_| if rng.random_bool(0.5) { -1 } else { 1 }).collect());
        }
        out
    };
    let mut sweep = PatternSweep {
        measurements: m,
        exhaustive,
        patterns: patterns.len(),
        passed: 0,
        first_failure: None,
    };
    for signs in patterns {
        let report = verify_bell_pair(seq, b, OutcomePattern::Forced(&signs))?;
        if report.equal {
            sweep.passed += 1;
        } else if sweep.first_failure.is_none() {
            sweep.first_failure = Some((signs, report));
        }
    }
    Ok(sweep)
}
