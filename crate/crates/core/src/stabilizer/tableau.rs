use std::fmt;

use rand::{Rng, RngCore};

use super::pauli::{Pauli, PauliString};
use super::StabilizerError;

/// How the sign of a random measurement outcome is chosen.
pub enum OutcomeChoice<'a> {
    /// Draw a fair coin from the given stream.
    Random(&'a mut dyn RngCore),
    /// Use this sign if the outcome is random; fail if a deterministic outcome
    /// disagrees.
    Forced(i8),
    /// Use this sign if the outcome is random; accept a deterministic outcome.
    Prefer(i8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub outcome: i8,
    pub deterministic: bool,
}

/// Whether a measured qubit stays in the register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    /// The qubit is consumed; its residual generator is dropped.
    Destructive,
    /// The qubit keeps its `±P` generator.
    Keep,
}

/// Stabilizer group on `n` qubits given by independent commuting generators,
/// optionally with designated logical operators.
#[derive(Clone, PartialEq)]
pub struct StabilizerTableau {
    n: usize,
    gens: Vec<PauliString>,
    active: Vec<bool>,
    logical_x: Option<PauliString>,
    logical_z: Option<PauliString>,
}

impl StabilizerTableau {
    /// Empty group (maximally mixed) on `n` qubits.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            gens: Vec::new(),
            active: vec![true; n],
            logical_x: None,
            logical_z: None,
        }
    }

    /// Product state where qubit `q` is the `+1` eigenstate of `letters[q]`.
    pub fn product_state(letters: &[Pauli]) -> Self {
        let n = letters.len();
        let mut t = Self::new(n);
        t.gens = letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, &p)| PauliString::single(n, q, p))
            .collect();
        t
    }

    pub fn from_generators(n: usize, gens: Vec<PauliString>) -> Result<Self, StabilizerError> {
        if let Some(g) = gens.iter().find(|g| g.num_qubits() != n) {
            return Err(StabilizerError::QubitCountMismatch {
                left: n,
                right: g.num_qubits(),
            });
        }
        let t = Self {
            gens,
            ..Self::new(n)
        };
        t.check()?;
        Ok(t)
    }

    /// Parses one `+XZI`-style generator per line; blank lines are ignored.
    pub fn from_text(text: &str) -> Result<Self, StabilizerError> {
        let gens = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<PauliString>, _>>()?;
        let n = gens.first().map_or(0, PauliString::num_qubits);
        Self::from_generators(n, gens)
    }

    pub fn to_text(&self) -> String {
        self.gens.iter().map(|g| format!("{g}\n")).collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.gens
    }

    pub fn is_active(&self, q: usize) -> bool {
        self.active[q]
    }

    pub fn logical_x(&self) -> Option<&PauliString> {
        self.logical_x.as_ref()
    }

    pub fn logical_z(&self) -> Option<&PauliString> {
        self.logical_z.as_ref()
    }

    /// Designates logical operators. Only their mutual anticommutation is
    /// checked: on a code state one of them (up to sign) is itself a stabilizer.
    pub fn set_logicals(&mut self, x: PauliString, z: PauliString) -> Result<(), StabilizerError> {
        if x.num_qubits() != self.n || z.num_qubits() != self.n {
            return Err(StabilizerError::QubitCountMismatch {
                left: self.n,
                right: x.num_qubits().max(z.num_qubits()),
            });
        }
        if x.commutes_with(&z) {
            return Err(StabilizerError::InvalidLogical(format!(
                "X_L = {x} and Z_L = {z} commute"
            )));
        }
        self.logical_x = Some(x);
        self.logical_z = Some(z);
        Ok(())
    }

    /// Adds a generator that commutes with, and is independent of, the group.
    pub fn add_generator(&mut self, g: PauliString) -> Result<(), StabilizerError> {
        if let Some(h) = self.gens.iter().find(|h| !h.commutes_with(&g)) {
            return Err(StabilizerError::NotCommuting(g.to_string(), h.to_string()));
        }
        if self.decompose(&g).is_some() {
            return Err(StabilizerError::Dependent(g.to_string()));
        }
        self.gens.push(g);
        Ok(())
    }

    /// Pairwise commutation and independence of the generators.
    pub fn check(&self) -> Result<(), StabilizerError> {
        for (i, a) in self.gens.iter().enumerate() {
            for b in &self.gens[i + 1..] {
                if !a.commutes_with(b) {
                    return Err(StabilizerError::NotCommuting(a.to_string(), b.to_string()));
                }
            }
        }
        if symplectic_rank(&self.gens) != self.gens.len() {
            return Err(StabilizerError::Dependent(
                "generator list is linearly dependent".into(),
            ));
        }
        Ok(())
    }

    fn each_operator(&mut self, mut f: impl FnMut(&mut PauliString)) {
        for g in &mut self.gens {
            f(g);
        }
        for l in self.logical_x.iter_mut().chain(self.logical_z.iter_mut()) {
            f(l);
        }
    }

    fn check_qubit(&self, q: usize) -> Result<(), StabilizerError> {
        if q >= self.n {
            return Err(StabilizerError::QubitOutOfRange { qubit: q, n: self.n });
        }
        if !self.active[q] {
            return Err(StabilizerError::QubitRemoved(q));
        }
        Ok(())
    }

    pub fn apply_h(&mut self, q: usize) -> Result<(), StabilizerError> {
        self.check_qubit(q)?;
        self.each_operator(|p| {
            let (x, z) = (p.x_bit(q), p.z_bit(q));
            if x && z {
                p.negate();
            }
            if x != z {
                p.flip_x(q);
                p.flip_z(q);
            }
        });
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), StabilizerError> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(StabilizerError::SameQubit(control));
        }
        self.each_operator(|p| {
            let (xc, zc, xt, zt) = (
                p.x_bit(control),
                p.z_bit(control),
                p.x_bit(target),
                p.z_bit(target),
            );
            if xc && zt && (xt == zc) {
                p.negate();
            }
            if xc {
                p.flip_x(target);
            }
            if zt {
                p.flip_z(control);
            }
        });
        Ok(())
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<(), StabilizerError> {
        self.apply_h(b)?;
        self.apply_cnot(a, b)?;
        self.apply_h(b)
    }

    /// Conjugates the state by a Pauli operator (signs of anticommuting
    /// generators flip).
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<(), StabilizerError> {
        if p.num_qubits() != self.n {
            return Err(StabilizerError::QubitCountMismatch {
                left: self.n,
                right: p.num_qubits(),
            });
        }
        self.each_operator(|g| {
            if !g.commutes_with(p) {
                g.negate();
            }
        });
        Ok(())
    }

    /// Brings a measured-out qubit back as the `+1` eigenstate of `letter`.
    pub fn reactivate(&mut self, q: usize, letter: Pauli) -> Result<(), StabilizerError> {
        if q >= self.n {
            return Err(StabilizerError::QubitOutOfRange { qubit: q, n: self.n });
        }
        if self.active[q] {
            return Err(StabilizerError::QubitStillActive(q));
        }
        self.active[q] = true;
        self.gens.push(PauliString::single(self.n, q, letter));
        Ok(())
    }

    /// If `p` (up to sign) lies in the group, returns its sign there.
    pub fn expectation(&self, p: &PauliString) -> Option<i8> {
        let subset = self.decompose(p)?;
        Some(self.product_of(&subset).sign() * p.sign())
    }

    fn product_of(&self, subset: &[usize]) -> PauliString {
        let mut acc = PauliString::identity(self.n);
        for &i in subset {
            acc.mul_assign(&self.gens[i]);
        }
        acc
    }

    /// Generators whose product equals `±p`, if any.
    pub(crate) fn decompose(&self, p: &PauliString) -> Option<Vec<usize>> {
        let g = self.gens.len();
        let mut rows: Vec<(Vec<u64>, Vec<u64>)> = self
            .gens
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut track = vec![0u64; g.div_ceil(64).max(1)];
                track[i / 64] |= 1 << (i % 64);
                (symplectic(s), track)
            })
            .collect();
        let cols = 2 * self.n;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            let Some(pr) = (r..rows.len()).find(|&i| bit(&rows[i].0, c)) else {
                continue;
            };
            rows.swap(r, pr);
            for i in 0..rows.len() {
                if i != r && bit(&rows[i].0, c) {
                    let (src_v, src_t) = rows[r].clone();
                    xor_into(&mut rows[i].0, &src_v);
                    xor_into(&mut rows[i].1, &src_t);
                }
            }
            pivots.push((r, c));
            r += 1;
        }
        let mut target = symplectic(p);
        let mut track = vec![0u64; g.div_ceil(64).max(1)];
        for &(row, c) in &pivots {
            if bit(&target, c) {
                xor_into(&mut target, &rows[row].0);
                xor_into(&mut track, &rows[row].1);
            }
        }
        if target.iter().any(|&w| w != 0) {
            return None;
        }
        Some((0..g).filter(|&i| bit(&track, i)).collect())
    }

    /// Measures `basis` on `qubit` following the usual update: the first
    /// anticommuting generator absorbs the others and is replaced by `m B`;
    /// all remaining operators are then cleared of the measured qubit.
    pub fn measure(
        &mut self,
        qubit: usize,
        basis: Pauli,
        choice: OutcomeChoice<'_>,
        mode: MeasureMode,
    ) -> Result<MeasurementRecord, StabilizerError> {
        self.check_qubit(qubit)?;
        if basis == Pauli::I {
            return Err(StabilizerError::Parse("cannot measure the identity".into()));
        }
        let p = PauliString::single(self.n, qubit, basis);
        let random_sign = |choice: OutcomeChoice<'_>| match choice {
            OutcomeChoice::Random(rng) => {
                if rng.random_bool(0.5) {
                    1
                } else {
                    -1
                }
            }
            OutcomeChoice::Forced(s) | OutcomeChoice::Prefer(s) => s.signum(),
        };

        let anti: Vec<usize> = (0..self.gens.len())
            .filter(|&i| !self.gens[i].commutes_with(&p))
            .collect();
        let (idx, record) = if let Some(&s0) = anti.first() {
            let pivot = self.gens[s0].clone();
            for &i in &anti[1..] {
                self.gens[i].mul_assign(&pivot);
            }
            for l in self.logical_x.iter_mut().chain(self.logical_z.iter_mut()) {
                if !l.commutes_with(&p) {
                    l.mul_assign(&pivot);
                }
            }
            let outcome = random_sign(choice);
            let mut g = p.clone();
            g.set_sign(outcome);
            self.gens[s0] = g;
            (
                s0,
                MeasurementRecord {
                    outcome,
                    deterministic: false,
                },
            )
        } else if let Some(subset) = self.decompose(&p) {
            let prod = self.product_of(&subset);
            let outcome = prod.sign();
            if let OutcomeChoice::Forced(s) = choice {
                if s.signum() != outcome {
                    return Err(StabilizerError::Contradiction {
                        qubit,
                        basis: basis.as_char(),
                        expected: outcome,
                    });
                }
            }
            self.gens[subset[0]] = prod;
            (
                subset[0],
                MeasurementRecord {
                    outcome,
                    deterministic: true,
                },
            )
        } else {
            // Commutes with the group without belonging to it: a logical
            // measurement. Logical operators it anticommutes with are lost.
            let outcome = random_sign(choice);
            if self.logical_x.as_ref().is_some_and(|l| !l.commutes_with(&p))
                || self.logical_z.as_ref().is_some_and(|l| !l.commutes_with(&p))
            {
                self.logical_x = None;
                self.logical_z = None;
            }
            let mut g = p.clone();
            g.set_sign(outcome);
            self.gens.push(g);
            (
                self.gens.len() - 1,
                MeasurementRecord {
                    outcome,
                    deterministic: false,
                },
            )
        };

        let pivot = self.gens[idx].clone();
        for (i, g) in self.gens.iter_mut().enumerate() {
            if i != idx && (g.x_bit(qubit) || g.z_bit(qubit)) {
                g.mul_assign(&pivot);
            }
        }
        for l in self.logical_x.iter_mut().chain(self.logical_z.iter_mut()) {
            if l.x_bit(qubit) || l.z_bit(qubit) {
                l.mul_assign(&pivot);
            }
        }
        if mode == MeasureMode::Destructive {
            self.gens.remove(idx);
            self.active[qubit] = false;
        }
        Ok(record)
    }

    /// Deterministic row-reduced echelon form (qubit-major, `x` before `z`).
    pub fn canonical_form(&self) -> StabilizerTableau {
        let mut rows = self.gens.clone();
        let mut r = 0;
        for c in 0..2 * self.n {
            let (q, is_z) = (c / 2, c % 2 == 1);
            let has = |p: &PauliString| if is_z { p.z_bit(q) } else { p.x_bit(q) };
            let Some(pr) = (r..rows.len()).find(|&i| has(&rows[i])) else {
                continue;
            };
            rows.swap(r, pr);
            let pivot = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && has(row) {
                    row.mul_assign(&pivot);
                }
            }
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        StabilizerTableau {
            gens: rows,
            ..self.clone()
        }
    }

    /// Keeps only `qubits` (in the given order). Every generator must already be
    /// supported inside that set.
    pub fn restrict(&self, qubits: &[usize]) -> Result<StabilizerTableau, StabilizerError> {
        let mut map = vec![None; self.n];
        for (new, &old) in qubits.iter().enumerate() {
            map[old] = Some(new);
        }
        let m = qubits.len();
        let gens = self
            .gens
            .iter()
            .filter(|g| !g.is_identity())
            .map(|g| {
                g.remap(m, &map)
                    .ok_or_else(|| StabilizerError::NotSeparable(g.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let remap_opt = |l: &Option<PauliString>| l.as_ref().and_then(|l| l.remap(m, &map));
        Ok(StabilizerTableau {
            n: m,
            gens,
            active: qubits.iter().map(|&q| self.active[q]).collect(),
            logical_x: remap_opt(&self.logical_x),
            logical_z: remap_opt(&self.logical_z),
        })
    }
}

/// Equality of the stabilizer groups (signs included).
pub fn tableau_equal(
    a: &StabilizerTableau,
    b: &StabilizerTableau,
) -> Result<bool, StabilizerError> {
    Ok(first_difference(a, b)?.is_none())
}

/// First canonical row at which two groups differ, as `(row, left, right)`.
pub fn first_difference(
    a: &StabilizerTableau,
    b: &StabilizerTableau,
) -> Result<Option<(usize, String, String)>, StabilizerError> {
    if a.n != b.n {
        return Err(StabilizerError::QubitCountMismatch {
            left: a.n,
            right: b.n,
        });
    }
    let (ca, cb) = (a.canonical_form(), b.canonical_form());
    let rows = ca.gens.len().max(cb.gens.len());
    for i in 0..rows {
        let la = ca.gens.get(i).map_or("<none>".to_string(), |g| g.to_string());
        let lb = cb.gens.get(i).map_or("<none>".to_string(), |g| g.to_string());
        if la != lb {
            return Ok(Some((i, la, lb)));
        }
    }
    Ok(None)
}

impl fmt::Display for StabilizerTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for StabilizerTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "StabilizerTableau({} qubits)", self.n)?;
        f.write_str(&self.to_text())?;
        if let (Some(x), Some(z)) = (&self.logical_x, &self.logical_z) {
            writeln!(f, "X_L {x}\nZ_L {z}")?;
        }
        Ok(())
    }
}

fn symplectic(p: &PauliString) -> Vec<u64> {
    let n = p.num_qubits();
    let mut v = vec![0u64; (2 * n).div_ceil(64).max(1)];
    for q in 0..n {
        if p.x_bit(q) {
            v[(2 * q) / 64] |= 1 << ((2 * q) % 64);
        }
        if p.z_bit(q) {
            v[(2 * q + 1) / 64] |= 1 << ((2 * q + 1) % 64);
        }
    }
    v
}

fn bit(v: &[u64], i: usize) -> bool {
    v[i / 64] >> (i % 64) & 1 == 1
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

fn symplectic_rank(gens: &[PauliString]) -> usize {
    let Some(first) = gens.first() else {
        return 0;
    };
    let mut rows: Vec<Vec<u64>> = gens.iter().map(symplectic).collect();
    let mut r = 0;
    for c in 0..2 * first.num_qubits() {
        let Some(pr) = (r..rows.len()).find(|&i| bit(&rows[i], c)) else {
            continue;
        };
        rows.swap(r, pr);
        let src = rows[r].clone();
        for row in rows.iter_mut().skip(r + 1) {
            if bit(row, c) {
                xor_into(row, &src);
            }
        }
        r += 1;
    }
    r
}
