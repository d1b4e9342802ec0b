use tree_bsm::genseq::{
    compile_bell_pair, verify_bell_pair, verify_patterns, Instruction, InstructionSequence,
    OutcomePattern,
};
use tree_bsm::search::{enumerate_trees, SearchBounds, UNBOUNDED_PHOTONS};
use tree_bsm::BranchingVector;

fn bv(s: &str) -> BranchingVector {
    s.parse().unwrap()
}

#[test]
fn every_small_tree_verifies_under_all_outcomes() {
    for b in enumerate_trees(SearchBounds::new(3, 3, UNBOUNDED_PHOTONS)) {
        let seq = compile_bell_pair(&b);
        let sweep = verify_patterns(&seq, &b, 16, 3).unwrap();
        assert!(sweep.all_passed(), "({b}): {:?}", sweep.first_failure);
    }
}

#[test]
fn two_level_sequence_shape() {
    let seq = compile_bell_pair(&bv("2,2"));
    assert_eq!(seq.instructions.len(), 27);
    assert_eq!(seq.photons, 12);
    assert_eq!(seq.matter_qubits, 3);
}

#[test]
fn text_form_survives_a_roundtrip_and_still_verifies() {
    let b = bv("2,1,2");
    let text = compile_bell_pair(&b).to_text();
    let seq = InstructionSequence::from_text(&text).unwrap();
    assert_eq!(seq.to_text(), text);
    let r = verify_bell_pair(&seq, &b, OutcomePattern::Seeded(11)).unwrap();
    assert!(r.equal, "{r:?}");
}

#[test]
fn tampering_is_caught() {
    let b = bv("2,2");
    let good = compile_bell_pair(&b);
    // Dropping any single CZ breaks the state for some outcome pattern.
    for (i, _) in good
        .instructions
        .iter()
        .enumerate()
        .filter(|(_, ins)| matches!(ins, Instruction::Cz(..)))
    {
        let mut bad = good.clone();
        bad.instructions.remove(i);
        let sweep = verify_patterns(&bad, &b, 16, 0).unwrap();
        assert!(!sweep.all_passed(), "removing instruction {i} went unnoticed");
    }
}
