use std::sync::Arc;

use peqlib::action::germ_groupoid;
use peqlib::bibundle::enumerate_peqs;
use peqlib::fintop::{is_open_map, FinSpace};
use peqlib::fixtures;
use peqlib::groupoid::{cech_groupoid, cover_map, covering_groupoid, FinGroupoid, GroupoidData};
use peqlib::random::{random_space, random_space_action};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture_groupoids() -> Vec<FinGroupoid> {
    vec![
        fixtures::gm(),
        fixtures::p2(),
        fixtures::cech3(),
        FinGroupoid::cyclic(4),
        FinGroupoid::space(&fixtures::sigma()),
        FinGroupoid::space(&fixtures::d2()),
    ]
}

#[test]
fn gm_is_etale_but_not_locally_hausdorff() {
    let gm = fixtures::gm();
    let p = gm.predicates();
    assert!(p.etale);
    assert!(!p.basic && !p.proper);
    assert!(!gm.g1().is_locally_hausdorff());
    assert_eq!(gm.g1().open_count(), 5);
}

#[test]
fn pair_groupoid_is_proper_and_basic() {
    let p2 = fixtures::p2();
    let p = p2.predicates();
    assert!(p.etale && p.basic && p.proper && p.free);
    assert_eq!(p2.orbit_space().0.len(), 1);
}

#[test]
fn cyclic_group_is_not_free() {
    let z4 = FinGroupoid::cyclic(4);
    assert_eq!(z4.n1(), 4);
    assert!(!z4.predicates().free);
    assert!(z4.predicates().proper);
}

#[test]
fn cech_groupoid_of_three_sets() {
    let (z, cover) = fixtures::cech3_cover();
    let g = cech_groupoid(&z, &cover).unwrap();
    assert!(g.is_isomorphic(&fixtures::cech3()));
    assert!(g.predicates().basic);
    assert_eq!(g.orbit_space().0.len(), z.len());
}

#[test]
fn groupoid_json_round_trip() {
    for g in fixture_groupoids() {
        let text = serde_json::to_string(&g.to_data()).unwrap();
        let back: GroupoidData = serde_json::from_str(&text).unwrap();
        let h = back.build().unwrap();
        assert!(h.is_isomorphic(&g));
        assert_eq!(h.to_data(), g.to_data());
    }
}

#[test]
fn restriction_to_the_range_of_a_bibundle_is_a_groupoid() {
    for g in fixture_groupoids() {
        let g = Arc::new(g);
        for x in enumerate_peqs(&g, 8) {
            let u = x.range_set();
            let gu = g.restrict(&u).expect("restriction verifies");
            assert_eq!(gu.n0(), u.count_ones(..));
        }
    }
}

#[test]
fn orbit_projections_are_open() {
    for g in fixture_groupoids() {
        let (q, labels) = g.orbit_space();
        assert!(is_open_map(g.g0(), &q, &labels));
    }
}

fn hausdorff(z: &FinSpace) -> bool {
    (0..z.len()).all(|a| {
        (0..z.len()).all(|b| {
            let mut m = z.nbhd(a).clone();
            m.intersect_with(z.nbhd(b));
            a == b || m.is_clear()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn covering_groupoids_are_basic(seed in any::<u64>(), pick in any::<(usize, usize)>()) {
        let z = random_space(&mut ChaCha8Rng::seed_from_u64(seed), 5);
        let opens = z.opens();
        let u = opens[pick.0 % opens.len()].clone();
        let mut v = opens[pick.1 % opens.len()].clone();
        // make it a cover
        let mut rest = z.full_set();
        rest.difference_with(&u);
        v.union_with(&z.open_hull(&rest));
        let f = cover_map(&z, &[u, v]).unwrap();
        let g = covering_groupoid(&f).unwrap();
        prop_assert!(g.predicates().basic);
        let (q, _) = g.orbit_space();
        prop_assert_eq!(q.len(), z.len());
        prop_assert_eq!(q.open_count(), z.open_count());
    }

    #[test]
    fn proper_free_groupoids_with_hausdorff_objects(seed in any::<u64>()) {
        let a = random_space_action(&mut ChaCha8Rng::seed_from_u64(seed), 4);
        let gr = germ_groupoid(&a).unwrap();
        let g = gr.groupoid();
        if hausdorff(g.g0()) {
            let p = g.predicates();
            if p.free {
                let orbit_hausdorff = hausdorff(&g.orbit_space().0);
                prop_assert_eq!(p.proper, p.basic && orbit_hausdorff);
            }
        }
    }
}
