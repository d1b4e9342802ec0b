use tree_bsm::build_tree;
use tree_bsm::stabilizer::{
    encode_logical, logical_state, tableau_equal, tree_code, verify_indirect_z, InputState,
    MeasureMode, OutcomeChoice, Pauli, StabilizerTableau,
};

fn cluster() -> StabilizerTableau {
    StabilizerTableau::from_text("+XZI\n+ZXZ\n+IZX").unwrap()
}

fn sorted_rows(t: &StabilizerTableau) -> Vec<String> {
    let mut rows: Vec<String> = t.generators().iter().map(|g| g.to_string()).collect();
    rows.sort();
    rows
}

fn signed(m: i8, letters: &str) -> String {
    format!("{}{letters}", if m > 0 { '+' } else { '-' })
}

#[test]
fn linear_cluster_z_measurement() {
    for m in [1i8, -1] {
        let mut t = cluster();
        let rec = t
            .measure(1, Pauli::Z, OutcomeChoice::Forced(m), MeasureMode::Keep)
            .unwrap();
        assert!(!rec.deterministic);
        assert_eq!(rec.outcome, m);
        let mut want = vec![signed(m, "XII"), signed(m, "IZI"), signed(m, "IIX")];
        want.sort();
        assert_eq!(sorted_rows(&t), want);
    }
}

#[test]
fn linear_cluster_x_measurement() {
    for m in [1i8, -1] {
        let mut t = cluster();
        t.measure(1, Pauli::X, OutcomeChoice::Forced(m), MeasureMode::Keep)
            .unwrap();
        let mut want = vec![signed(m, "ZIZ"), "+XIX".to_string(), signed(m, "IXI")];
        want.sort();
        assert_eq!(sorted_rows(&t), want);
        let expected = StabilizerTableau::from_text(&want.join("\n")).unwrap();
        assert!(tableau_equal(&t, &expected).unwrap());
    }
}

#[test]
fn second_measurement_of_same_basis_is_deterministic() {
    let mut t = cluster();
    t.measure(1, Pauli::Z, OutcomeChoice::Forced(-1), MeasureMode::Keep)
        .unwrap();
    let again = t
        .measure(1, Pauli::Z, OutcomeChoice::Prefer(1), MeasureMode::Keep)
        .unwrap();
    assert!(again.deterministic);
    assert_eq!(again.outcome, -1);
    assert!(t
        .measure(1, Pauli::Z, OutcomeChoice::Forced(1), MeasureMode::Keep)
        .is_err());
}

#[test]
fn deep_stabilizers_fix_every_logical_state() {
    for b in ["2,2", "3,1,2", "2,2,2"] {
        let tree = build_tree(&b.parse().unwrap()).unwrap();
        let n = tree.vertex_count() - 1;
        let code = tree_code(&tree, n, |v| v - 1);
        assert_eq!(code.stabilizers.len(), n - 1, "{b}");
        assert!(!code.logical_x.commutes_with(&code.logical_z));
        for input in [InputState::Plus, InputState::Zero, InputState::MinusY] {
            let state = logical_state(&tree, input);
            for s in &code.stabilizers {
                assert_eq!(state.expectation(s), Some(1), "{b} {input:?} {s}");
            }
        }
    }
}

#[test]
fn encoding_by_root_fusion_gives_the_logical_state() {
    let tree = build_tree(&"2,2".parse().unwrap()).unwrap();
    for input in [InputState::Plus, InputState::One, InputState::PlusY] {
        for outcomes in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let enc = encode_logical(&tree, input, outcomes).unwrap();
            let want = logical_state(&tree, input);
            assert!(tableau_equal(&enc.tableau, &want).unwrap(), "{input:?} {outcomes:?}");
        }
    }
}

#[test]
fn indirect_z_holds_on_every_non_leaf() {
    for b in ["2", "2,2", "3,2,1"] {
        let tree = build_tree(&b.parse().unwrap()).unwrap();
        for v in 1..tree.vertex_count() {
            if !tree.is_leaf(v) {
                assert!(verify_indirect_z(&tree, v).unwrap(), "{b} vertex {v}");
            }
        }
    }
}
