//! Graph states, the tree code and its logical encoding.

use crate::model::TreeGraph;

use super::pauli::{Pauli, PauliString};
use super::tableau::{MeasureMode, OutcomeChoice, StabilizerTableau};
use super::StabilizerError;

/// Graph state on `n` vertices: one `K_v = X_v prod_{w in N_v} Z_w` per vertex.
pub fn graph_state_from_edges(n: usize, edges: &[(usize, usize)]) -> StabilizerTableau {
    let mut nbrs = vec![Vec::new(); n];
    for &(a, b) in edges {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let gens = (0..n)
        .map(|v| {
            PauliString::from_sparse(
                n,
                std::iter::once((v, Pauli::X)).chain(nbrs[v].iter().map(|&w| (w, Pauli::Z))),
            )
        })
        .collect();
    StabilizerTableau::from_generators(n, gens).expect("graph-state generators are valid")
}

pub fn graph_state_tableau(tree: &TreeGraph) -> StabilizerTableau {
    let edges: Vec<_> = tree.edges().collect();
    graph_state_from_edges(tree.vertex_count(), &edges)
}

/// Single-qubit stabilizer input to the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputState {
    Plus,
    Minus,
    Zero,
    One,
    PlusY,
    MinusY,
}

impl InputState {
    fn stabilizer(self) -> (Pauli, i8) {
        match self {
            InputState::Plus => (Pauli::X, 1),
            InputState::Minus => (Pauli::X, -1),
            InputState::Zero => (Pauli::Z, 1),
            InputState::One => (Pauli::Z, -1),
            InputState::PlusY => (Pauli::Y, 1),
            InputState::MinusY => (Pauli::Y, -1),
        }
    }

    /// Logical Pauli (`X_L`, `Y_L` or `Z_L`) and the sign that stabilizes the
    /// encoded state.
    pub fn logical(self) -> (Pauli, i8) {
        self.stabilizer()
    }
}

/// Tree code on the non-root vertices, with `vertex -> qubit` placement.
///
/// `X_L = X_v prod_{w in C_v} Z_w` for the first level-1 vertex `v`;
/// `Z_L = prod_{u in C_0} Z_u`; stabilizers are `K_u` for every vertex at
/// level 2 or deeper plus `X_{L,i} X_{L,j}` between level-1 vertices.
#[derive(Debug, Clone)]
pub struct TreeCode {
    pub stabilizers: Vec<PauliString>,
    pub logical_x: PauliString,
    pub logical_z: PauliString,
}

/// Builds the code operators of `tree` on an `n`-qubit register where vertex
/// `v` (non-root) sits on qubit `place(v)`.
pub fn tree_code(tree: &TreeGraph, n: usize, place: impl Fn(usize) -> usize) -> TreeCode {
    let x_of = |v: usize| {
        PauliString::from_sparse(
            n,
            std::iter::once((place(v), Pauli::X))
                .chain(tree.children(v).map(|w| (place(w), Pauli::Z))),
        )
    };
    let level1: Vec<usize> = tree.children(tree.root()).collect();
    let mut stabilizers = Vec::new();
    for v in 0..tree.vertex_count() {
        if tree.level(v) >= 2 {
            let nb = tree.neighbors(v);
            stabilizers.push(PauliString::from_sparse(
                n,
                std::iter::once((place(v), Pauli::X))
                    .chain(nb.into_iter().map(|w| (place(w), Pauli::Z))),
            ));
        }
    }
    let first = x_of(level1[0]);
    for &j in &level1[1..] {
        stabilizers.push(first.mul(&x_of(j)));
    }
    TreeCode {
        stabilizers,
        logical_z: PauliString::from_sparse(n, level1.iter().map(|&u| (place(u), Pauli::Z))),
        logical_x: first,
    }
}

/// Result of attaching an input qubit to a tree and measuring it out.
#[derive(Debug, Clone)]
pub struct EncodedTree {
    /// Code state on the `n - 1` non-root vertices (vertex `v` on qubit
    /// `v - 1`), with logical operators designated.
    pub tableau: StabilizerTableau,
    pub input_outcome: i8,
    pub root_outcome: i8,
}

/// Encodes a single-qubit state into the tree: `CZ(input, root)`, `X` on both,
/// then `X_L` if the root gave `-1` and `Z_L` if the input gave `-1`.
///
/// `outcomes` = `(input, root)` signs used when those outcomes are random.
pub fn encode_logical(
    tree: &TreeGraph,
    input: InputState,
    outcomes: (i8, i8),
) -> Result<EncodedTree, StabilizerError> {
    let n = tree.vertex_count();
    let (p, sign) = input.stabilizer();
    let mut gens = graph_state_tableau(tree)
        .generators()
        .iter()
        .map(|g| widen(g, n + 1))
        .collect::<Vec<_>>();
    let mut inp = PauliString::single(n + 1, n, p);
    inp.set_sign(sign);
    gens.push(inp);
    let mut t = StabilizerTableau::from_generators(n + 1, gens)?;
    t.apply_cz(n, tree.root())?;

    let code = tree_code(tree, n + 1, |v| v);
    let input_outcome = t
        .measure(
            n,
            Pauli::X,
            OutcomeChoice::Prefer(outcomes.0),
            MeasureMode::Destructive,
        )?
        .outcome;
    let root_outcome = t
        .measure(
            tree.root(),
            Pauli::X,
            OutcomeChoice::Prefer(outcomes.1),
            MeasureMode::Destructive,
        )?
        .outcome;
    if root_outcome < 0 {
        t.apply_pauli(&code.logical_x)?;
    }
    if input_outcome < 0 {
        t.apply_pauli(&code.logical_z)?;
    }
    let keep: Vec<usize> = (1..n).collect();
    let mut out = t.restrict(&keep)?;
    let shifted = tree_code(tree, n - 1, |v| v - 1);
    out.set_logicals(shifted.logical_x, shifted.logical_z)?;
    Ok(EncodedTree {
        tableau: out,
        input_outcome,
        root_outcome,
    })
}

/// The code state `|input>_L` built directly from the code description.
pub fn logical_state(tree: &TreeGraph, input: InputState) -> StabilizerTableau {
    let n = tree.vertex_count() - 1;
    let code = tree_code(tree, n, |v| v - 1);
    let (p, sign) = input.logical();
    let mut logical = match p {
        Pauli::X => code.logical_x.clone(),
        Pauli::Z => code.logical_z.clone(),
        Pauli::Y => {
            // Y_L = i X_L Z_L; X_L and Z_L overlap on exactly one qubit.
            let mut y = PauliString::identity(n);
            for q in 0..n {
                let (x, z) = (code.logical_x.get(q), code.logical_z.get(q));
                y.set(
                    q,
                    match (x, z) {
                        (Pauli::X, Pauli::Z) => Pauli::Y,
                        (Pauli::I, other) | (other, Pauli::I) => other,
                        (Pauli::Z, Pauli::Z) => Pauli::I,
                        _ => unreachable!("tree logicals use X on one qubit and Z elsewhere"),
                    },
                );
            }
            y
        }
        Pauli::I => unreachable!(),
    };
    logical.set_sign(sign);
    let mut gens = code.stabilizers;
    gens.push(logical);
    let mut t = StabilizerTableau::from_generators(n, gens).expect("code state is valid");
    t.set_logicals(code.logical_x, code.logical_z)
        .expect("tree logicals are valid");
    t
}

fn widen(p: &PauliString, m: usize) -> PauliString {
    let mut out = PauliString::from_sparse(m, p.support().into_iter().map(|q| (q, p.get(q))));
    out.set_sign(p.sign());
    out
}

/// Checks operationally that `Z_target` can be read from `X` on its first
/// child `w` and `Z` on all of `w`'s children, using `Z_r K_w = X_w prod Z_s`.
///
/// For both signs of a prior `Z_target` measurement and every sign pattern of
/// the readout measurements, the readout product must equal that sign.
pub fn verify_indirect_z(tree: &TreeGraph, target: usize) -> Result<bool, StabilizerError> {
    if target >= tree.vertex_count() {
        return Err(StabilizerError::QubitOutOfRange {
            qubit: target,
            n: tree.vertex_count(),
        });
    }
    let Some(w) = tree.children(target).next() else {
        return Err(StabilizerError::LeafTarget(target));
    };
    let n = tree.vertex_count();
    let graph = graph_state_tableau(tree);

    // Algebraic identity first.
    let mut lhs = PauliString::single(n, target, Pauli::Z);
    lhs.mul_assign(&graph.generators()[w]);
    let rhs = PauliString::from_sparse(
        n,
        std::iter::once((w, Pauli::X)).chain(tree.children(w).map(|s| (s, Pauli::Z))),
    );
    if lhs != rhs {
        return Ok(false);
    }

    let readout: Vec<(usize, Pauli)> = std::iter::once((w, Pauli::X))
        .chain(tree.children(w).map(|s| (s, Pauli::Z)))
        .collect();
    for m in [1i8, -1] {
        for pattern in 0u64..(1 << readout.len()) {
            let mut t = graph.clone();
            let truth = t
                .measure(target, Pauli::Z, OutcomeChoice::Forced(m), MeasureMode::Destructive)?
                .outcome;
            let mut product = 1i8;
            for (i, &(q, b)) in readout.iter().enumerate() {
                let want = if pattern >> i & 1 == 1 { -1 } else { 1 };
                product *= t
                    .measure(q, b, OutcomeChoice::Prefer(want), MeasureMode::Destructive)?
                    .outcome;
            }
            if product != truth {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_tree, BranchingVector};
    use crate::stabilizer::tableau_equal;

    fn tree(s: &str) -> TreeGraph {
        build_tree(&s.parse::<BranchingVector>().unwrap()).unwrap()
    }

    #[test]
    fn star_graph_state() {
        let g = graph_state_tableau(&tree("2"));
        assert_eq!(g.to_text(), "+XZZ\n+ZXI\n+ZIX\n");
    }

    #[test]
    fn single_vertex() {
        assert_eq!(graph_state_from_edges(1, &[]).to_text(), "+X\n");
    }

    #[test]
    fn tree_code_counts() {
        let t = tree("3,2");
        let code = tree_code(&t, 9, |v| v - 1);
        assert_eq!(code.stabilizers.len(), 6 + 2);
        assert!(!code.logical_x.commutes_with(&code.logical_z));
        for s in &code.stabilizers {
            assert!(s.commutes_with(&code.logical_x) && s.commutes_with(&code.logical_z));
        }
    }

    #[test]
    fn encode_plus_on_star_is_product() {
        let e = encode_logical(&tree("2"), InputState::Plus, (1, 1)).unwrap();
        let expected = StabilizerTableau::from_text("+XI\n+IX\n").unwrap();
        assert!(tableau_equal(&e.tableau, &expected).unwrap());
    }

    #[test]
    fn encode_zero_on_star_is_cat() {
        let e = encode_logical(&tree("2"), InputState::Zero, (1, 1)).unwrap();
        let expected = StabilizerTableau::from_text("+XX\n+ZZ\n").unwrap();
        assert!(tableau_equal(&e.tableau, &expected).unwrap());
    }

    #[test]
    fn leaf_target_is_rejected() {
        assert!(matches!(
            verify_indirect_z(&tree("2"), 1),
            Err(StabilizerError::LeafTarget(1))
        ));
    }
}
