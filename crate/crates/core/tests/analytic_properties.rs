use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use tree_bsm::analytic::{logical_bsm, pr_complete};
use tree_bsm::search::{enumerate_trees, SearchBounds, UNBOUNDED_PHOTONS};
use tree_bsm::{BranchingVector, ChannelParams, Protocol};

const BOTH: [Protocol; 2] = [Protocol::Static, Protocol::Dynamic];

fn bv(s: &str) -> BranchingVector {
    s.parse().unwrap()
}

fn arb_tree() -> impl Strategy<Value = BranchingVector> {
    prop::collection::vec(1usize..6, 1..4).prop_map(|v| BranchingVector::new(v).unwrap())
}

#[test]
fn lossless_success_depends_only_on_the_root() {
    let params = ChannelParams::lossless();
    for b0 in 1..=20 {
        for rest in [vec![], vec![1], vec![3, 2], vec![2, 1, 4]] {
            let mut v = vec![b0];
            v.extend(rest);
            let b = BranchingVector::new(v).unwrap();
            for p in BOTH {
                let pr = pr_complete(p, &b, &params).unwrap();
                assert_abs_diff_eq!(pr, 1.0 - 0.5f64.powi(b0 as i32), epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn photon_milestones() {
    assert_eq!(bv("2,2").photon_count(), 7);
    assert_eq!(bv("15,15,2").photon_count(), 691);
    assert_eq!(bv("74,15").photon_count(), 1185);
}

#[test]
fn single_pair_trees_cannot_beat_two_photons() {
    for eta in [0.3, 0.6, 0.9, 0.99] {
        let params = ChannelParams::new(eta, 0.0).unwrap();
        for p in BOTH {
            assert!(pr_complete(p, &bv("1"), &params).unwrap() <= eta * eta + 1e-15);
        }
    }
}

#[test]
fn no_faults_means_no_errors() {
    let params = ChannelParams::new(0.8, 0.0).unwrap();
    for b in enumerate_trees(SearchBounds::new(3, 4, UNBOUNDED_PHOTONS)) {
        for p in BOTH {
            let r = logical_bsm(p, &b, &params).unwrap();
            assert_eq!((r.err_xx, r.err_zz, r.err_complete), (0.0, 0.0, 0.0), "({b}) {p}");
        }
    }
}

#[test]
fn loss_only_has_no_closed_form() {
    let params = ChannelParams::new(0.8, 0.0).unwrap();
    assert!(logical_bsm(Protocol::LossOnly, &bv("2,2"), &params).is_err());
}

#[test]
fn two_level_tree_overcomes_the_two_photon_limit() {
    let b = bv("15,15,2");
    for i in 0..=50 {
        let eta = 0.5 + 0.01 * i as f64;
        let params = ChannelParams::new(eta, 0.0).unwrap();
        let s = pr_complete(Protocol::Static, &b, &params).unwrap();
        let d = pr_complete(Protocol::Dynamic, &b, &params).unwrap();
        assert!(d >= s - 1e-12, "eta {eta}");
        // At eta = 1 the bound is 1 - 2^-b0 < 1, so the grid end is excluded.
        if eta >= 0.9 - 1e-12 && eta < 1.0 {
            assert!(s > eta * eta && d > eta * eta, "eta {eta}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn success_rises_with_transmission(b in arb_tree(), lo in 0.05f64..0.95, step in 0.0f64..0.05) {
        let hi = lo + step;
        for p in BOTH {
            let a = pr_complete(p, &b, &ChannelParams::new(lo, 0.0).unwrap()).unwrap();
            let c = pr_complete(p, &b, &ChannelParams::new(hi, 0.0).unwrap()).unwrap();
            prop_assert!(c >= a - 1e-12);
        }
    }

    #[test]
    fn adaptivity_never_hurts(b in arb_tree(), eta in 0.05f64..1.0) {
        let params = ChannelParams::new(eta, 0.0).unwrap();
        let s = pr_complete(Protocol::Static, &b, &params).unwrap();
        let d = pr_complete(Protocol::Dynamic, &b, &params).unwrap();
        prop_assert!(d >= s - 1e-12);
    }

    #[test]
    fn results_are_probabilities(b in arb_tree(), eta in 0.0f64..=1.0, eps in 0.0f64..0.2) {
        let params = ChannelParams::new(eta, eps).unwrap();
        for p in BOTH {
            let r = logical_bsm(p, &b, &params).unwrap();
            for x in [r.pr_xx, r.pr_zz, r.pr_complete, r.err_xx, r.err_zz, r.err_complete] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&x), "{r:?}");
            }
            prop_assert!(r.pr_complete <= r.pr_zz.min(r.pr_xx) + 1e-12);
        }
    }

    #[test]
    fn errors_grow_with_fault_rate(b in arb_tree(), eta in 0.5f64..1.0, lo in 0.0f64..0.05, step in 0.0f64..0.02) {
        for p in BOTH {
            let a = logical_bsm(p, &b, &ChannelParams::new(eta, lo).unwrap()).unwrap();
            let c = logical_bsm(p, &b, &ChannelParams::new(eta, lo + step).unwrap()).unwrap();
            prop_assert!(c.err_complete >= a.err_complete - 1e-12);
        }
    }
}
