use std::sync::Arc;

use peqlib::action::{
    action_from_grading, find_action_isomorphism, germ_groupoid, grading_from_cocycle, transformation_groupoid,
    ActionData, ActionError, SAction, SGradedGroupoid,
};
use peqlib::bibundle::local_centralisers;
use peqlib::fixtures;
use peqlib::groupoid::FinGroupoid;
use peqlib::isg::InvSemigroup;
use peqlib::random::{random_grading, random_space_action};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gm_s3() -> SGradedGroupoid {
    let gm = Arc::new(fixtures::gm());
    let slices = fixtures::gm_slices().iter().map(|v| gm.g1().set_of(v).unwrap()).collect();
    SGradedGroupoid::new(fixtures::s3(), gm, slices).unwrap()
}

fn check_domains(a: &SAction) -> Result<(), TestCaseError> {
    let s = a.semigroup();
    for t in 0..s.len() {
        let tt = s.mul(t, s.star(t));
        prop_assert_eq!(a.x(t).range_set(), a.x(tt).range_set());
        prop_assert_eq!(a.x(t).range_set(), a.x(s.star(t)).source_set());
        let ts = s.mul(s.star(t), t);
        prop_assert_eq!(a.x(t).source_set(), a.x(ts).range_set());
    }
    Ok(())
}

/// `x·x* = 1_{r(x)}` under the trivialization of `X_{tt*}`.
fn check_units(a: &SAction) -> Result<(), TestCaseError> {
    let s = a.semigroup();
    let g = a.groupoid();
    for t in 0..s.len() {
        let ts = s.star(t);
        let e = s.mul(t, ts);
        let phi = a.trivialization(e).expect("idempotents are trivialized");
        for x in 0..a.x(t).len() {
            let xx = a.mu(t, ts, x, a.star(t)[x]).unwrap();
            prop_assert!(g.is_unit(phi[xx]));
            prop_assert_eq!(g.r()[phi[xx]], a.x(t).r()[x]);
        }
    }
    Ok(())
}

/// For idempotents, `X_e ≅ G¹_{U_e}` with `U_{ef} = U_e ∩ U_f`.
fn check_semilattice(a: &SAction) -> Result<(), TestCaseError> {
    let s = a.semigroup();
    let idem = s.idempotents();
    for &e in &idem {
        prop_assert!(a.trivialization(e).is_some());
        for &f in &idem {
            let mut meet = a.x(e).range_set();
            meet.intersect_with(&a.x(f).range_set());
            prop_assert_eq!(a.x(s.mul(e, f)).range_set(), meet);
        }
    }
    Ok(())
}

#[test]
fn gm_grading_and_its_action() {
    let gr = gm_s3();
    assert!(gr.is_saturated());
    assert!(!gr.zero_empty());
    let a = action_from_grading(&gr).unwrap();
    assert!(a.coherence().failures.is_empty());
    let sizes: Vec<usize> = (0..3).map(|t| a.x(t).len()).collect();
    assert_eq!(sizes, vec![2, 1, 2]);
    let t = transformation_groupoid(&a).unwrap();
    assert!(t.graded.is_isomorphic(&gr));
}

#[test]
fn defective_grading_reports_gr1() {
    let gm = Arc::new(fixtures::gm());
    let slices = vec![
        gm.g1().set_of(&["1o", "1c"]).unwrap(),
        gm.g1().set_of(&["1o"]).unwrap(),
        gm.g1().set_of(&["g-"]).unwrap(),
    ];
    let err = SGradedGroupoid::new(fixtures::s3(), gm, slices).unwrap_err();
    assert!(matches!(err, ActionError::Gr1(_, _)), "{err:?}");
}

#[test]
fn parity_grading_of_z4() {
    let z4 = Arc::new(FinGroupoid::cyclic(4));
    let gr = grading_from_cocycle(&z4, &InvSemigroup::cyclic_group(2), &[0, 1, 0, 1]).unwrap();
    let sizes: Vec<usize> = gr.slices().iter().map(|s| s.count_ones(..)).collect();
    assert_eq!(sizes, vec![2, 2]);
    let a = action_from_grading(&gr).unwrap();
    let g = a.semigroup().index_of("1").unwrap();
    // the odd slice is its own inverse
    assert_eq!(a.semigroup().star(1 - g), 1 - g);
}

#[test]
fn action_json_round_trip() {
    let a = action_from_grading(&gm_s3()).unwrap();
    let text = serde_json::to_string(&a.to_data()).unwrap();
    let back: ActionData = serde_json::from_str(&text).unwrap();
    let b = back.build().unwrap();
    assert!(find_action_isomorphism(&a, &b).is_some());
}

#[test]
fn wide_model_recovers_gm() {
    let germ = germ_groupoid(
        &peqlib::action::SActionOnSpace::from_bisections(
            &fixtures::gm(),
            &fixtures::s3(),
            &fixtures::gm_slices().iter().map(|v| fixtures::gm().g1().set_of(v).unwrap()).collect::<Vec<_>>(),
        )
        .unwrap(),
    )
    .unwrap();
    assert!(germ.groupoid().is_isomorphic(&fixtures::gm()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn structure_of_actions_from_gradings(seed in any::<u64>()) {
        let gr = random_grading(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = action_from_grading(&gr).unwrap();
        check_domains(&a)?;
        check_units(&a)?;
        check_semilattice(&a)?;
        prop_assert!(a.coherence().failures.is_empty());
    }

    #[test]
    fn structure_of_induced_actions(seed in any::<u64>()) {
        let sa = random_space_action(&mut ChaCha8Rng::seed_from_u64(seed), 4);
        let a = sa.induced_action().unwrap();
        check_domains(&a)?;
        check_units(&a)?;
        check_semilattice(&a)?;
        // the transformation groupoid of the induced action is the germ groupoid
        let t = transformation_groupoid(&a).unwrap();
        prop_assert!(t.graded.is_isomorphic(&germ_groupoid(&sa).unwrap()));
    }

    #[test]
    fn actions_with_isomorphic_pieces_are_isomorphic(seed in any::<u64>()) {
        let gr = random_grading(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = action_from_grading(&gr).unwrap();
        let (_, nontrivial) = local_centralisers(a.groupoid());
        if !nontrivial {
            let t = transformation_groupoid(&a).unwrap();
            let b = action_from_grading(&t.graded).unwrap();
            prop_assert!(find_action_isomorphism(&a, &b).is_some());
        }
    }
}
