use std::fmt;
use std::str::FromStr;

use super::StabilizerError;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Hermitian Pauli string with a real sign, stored as packed x/z bit vectors.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    negative: bool,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
            negative: false,
        }
    }

    /// `+P` on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n);
        s.set(qubit, p);
        s
    }

    /// Builds `+prod_q P_q` from `(qubit, letter)` pairs; repeated qubits multiply
    /// (only commuting repeats such as `Z` twice are meaningful).
    pub fn from_sparse(n: usize, letters: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        let mut s = Self::identity(n);
        for (q, p) in letters {
            s.mul_assign(&Self::single(n, q, p));
        }
        s
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn set_sign(&mut self, sign: i8) {
        self.negative = sign < 0;
    }

    pub fn negate(&mut self) {
        self.negative = !self.negative;
    }

    pub fn get(&self, q: usize) -> Pauli {
        let (w, b) = (q / 64, q % 64);
        Pauli::from_bits(self.x[w] >> b & 1 == 1, self.z[w] >> b & 1 == 1)
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        let (w, b) = (q / 64, q % 64);
        let (x, z) = p.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((x as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((z as u64) << b);
    }

    pub(crate) fn x_bit(&self, q: usize) -> bool {
        self.x[q / 64] >> (q % 64) & 1 == 1
    }

    pub(crate) fn z_bit(&self, q: usize) -> bool {
        self.z[q / 64] >> (q % 64) & 1 == 1
    }

    pub(crate) fn flip_x(&mut self, q: usize) {
        self.x[q / 64] ^= 1 << (q % 64);
    }

    pub(crate) fn flip_z(&mut self, q: usize) {
        self.z[q / 64] ^= 1 << (q % 64);
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// Qubits acted on non-trivially.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.get(q) != Pauli::I).collect()
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let mut parity = 0u32;
        for i in 0..self.x.len() {
            parity ^= ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones() & 1;
        }
        parity == 0
    }

    /// `self <- self * other`. Both must commute so the product stays Hermitian.
    pub fn mul_assign(&mut self, other: &PauliString) {
        debug_assert_eq!(self.n, other.n);
        debug_assert!(self.commutes_with(other), "product of anticommuting Paulis");
        // Exponent of i picked up letter by letter: +1 for XY, YZ, ZX and -1
        // for the reversed orders.
        let mut phase: i64 = 0;
        for i in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[i], self.z[i], other.x[i], other.z[i]);
            let (px, py, pz) = (x1 & !z1, x1 & z1, !x1 & z1);
            let (qx, qy, qz) = (x2 & !z2, x2 & z2, !x2 & z2);
            let pos = (px & qy) | (py & qz) | (pz & qx);
            let neg = (px & qz) | (py & qx) | (pz & qy);
            phase += pos.count_ones() as i64 - neg.count_ones() as i64;
            self.x[i] = x1 ^ x2;
            self.z[i] = z1 ^ z2;
        }
        let phase = phase.rem_euclid(4);
        debug_assert!(phase % 2 == 0);
        self.negative ^= other.negative ^ (phase == 2);
    }

    pub fn mul(&self, other: &PauliString) -> PauliString {
        let mut out = self.clone();
        out.mul_assign(other);
        out
    }

    /// Letters only, without the sign.
    pub fn letters(&self) -> String {
        (0..self.n).map(|q| self.get(q).as_char()).collect()
    }

    /// Reindexes onto `m` qubits: qubit `q` moves to `map[q]`; qubits mapped
    /// to `None` must carry the identity.
    pub(crate) fn remap(&self, m: usize, map: &[Option<usize>]) -> Option<PauliString> {
        let mut out = PauliString::identity(m);
        out.negative = self.negative;
        for q in 0..self.n {
            let p = self.get(q);
            if p == Pauli::I {
                continue;
            }
            out.set(map[q]?, p);
        }
        Some(out)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.negative { '-' } else { '+' }, self.letters())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PauliString {
    type Err = StabilizerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let mut out = PauliString::identity(body.chars().count());
        out.negative = negative;
        for (q, c) in body.chars().enumerate() {
            let p = match c {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(StabilizerError::Parse(format!(
                        "unexpected letter {other:?} in {s:?}"
                    )))
                }
            };
            out.set(q, p);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["+XZI", "-YYZ", "+I"] {
            assert_eq!(ps(s).to_string(), s);
        }
        assert_eq!(ps("XZ").to_string(), "+XZ");
        assert!("+XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn products_track_sign() {
        // (XX)(ZZ) = (XZ)(XZ) = (-iY)(-iY) = -YY
        assert_eq!(ps("XX").mul(&ps("ZZ")), ps("-YY"));
        assert_eq!(ps("XZ").mul(&ps("ZX")), ps("YY"));
        assert_eq!(ps("-XI").mul(&ps("XZ")), ps("-IZ"));
        assert_eq!(ps("YY").mul(&ps("YY")), ps("II"));
    }

    #[test]
    fn commutation() {
        assert!(ps("XX").commutes_with(&ps("ZZ")));
        assert!(!ps("XI").commutes_with(&ps("ZI")));
        assert!(ps("XZI").commutes_with(&ps("ZXZ")));
        assert!(!ps("XZI").commutes_with(&ps("ZII")));
    }

    #[test]
    fn wide_strings_span_words() {
        let n = 130;
        let a = PauliString::from_sparse(n, [(0, Pauli::X), (64, Pauli::Z), (129, Pauli::Y)]);
        assert_eq!(a.support(), vec![0, 64, 129]);
        assert_eq!(a.weight(), 3);
        assert!(a.mul(&a).is_identity());
    }

    /// Product of the graph-state generators selected by `mask`.
    fn graph_element(edges: u32, mask: u32) -> PauliString {
        let n = 6;
        let mut acc = PauliString::identity(n);
        for v in 0..n {
            if mask >> v & 1 == 0 {
                continue;
            }
            let mut k = PauliString::single(n, v, Pauli::X);
            let mut bit = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if edges >> bit & 1 == 1 && (a == v || b == v) {
                        k.mul_assign(&PauliString::single(n, a + b - v, Pauli::Z));
                    }
                    bit += 1;
                }
            }
            acc.mul_assign(&k);
        }
        acc
    }

    proptest! {
        #[test]
        fn commuting_products_are_associative(edges in 0u32..(1 << 15), ma in 0u32..64, mb in 0u32..64, mc in 0u32..64) {
            let (a, b, c) = (graph_element(edges, ma), graph_element(edges, mb), graph_element(edges, mc));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            let ab = a.mul(&b);
            prop_assert_eq!(ab.mul(&ab), PauliString::identity(6));
        }
    }
}
