use peqlib::fintop::{is_continuous, preimage, product, set_from, CMap, FinSpace, PointSet, SpaceData};
use peqlib::fixtures;
use peqlib::random::random_space;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hausdorffness of the minimal neighbourhood of each point, checked pairwise.
fn locally_hausdorff_oracle(z: &FinSpace) -> bool {
    (0..z.len()).all(|x| {
        let u = z.nbhd(x);
        u.ones().all(|a| {
            u.ones().all(|b| {
                let mut m = z.nbhd(a).clone();
                m.intersect_with(z.nbhd(b));
                a == b || m.is_clear()
            })
        })
    })
}

fn all_subsets(n: usize) -> impl Iterator<Item = PointSet> {
    (0u32..1 << n).map(move |m| set_from(n, (0..n).filter(|&i| m >> i & 1 == 1)))
}

#[test]
fn sierpinski_space() {
    let s = fixtures::sigma();
    assert_eq!(s.open_count(), 3);
    assert!(s.is_t0());
    assert!(!s.is_hausdorff());
    assert!(!s.is_locally_hausdorff());
    let o = s.set_of(&["o"]).unwrap();
    assert!(s.is_open(&o));
    assert!(!s.is_closed(&o));
}

#[test]
fn two_point_discrete_space_is_hausdorff() {
    let d = fixtures::d2();
    assert_eq!(d.open_count(), 4);
    assert!(d.is_hausdorff() && d.is_locally_hausdorff());
}

#[test]
fn product_of_sierpinski_spaces() {
    let s = fixtures::sigma();
    let (sq, pairs) = product(&s, &s);
    assert_eq!(pairs.len(), 4);
    assert_eq!(sq.open_count(), 6);
}

#[test]
fn discontinuous_assignment_is_rejected() {
    let s = fixtures::sigma();
    let (o, c) = (s.point("o").unwrap(), s.point("c").unwrap());
    let mut flip = vec![0; 2];
    flip[o] = c;
    flip[c] = o;
    assert!(CMap::new(s.clone(), s.clone(), flip).is_err());
    assert!(CMap::new(s.clone(), s, vec![o, o]).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn opens_form_a_bounded_lattice(seed in any::<u64>()) {
        let z = random_space(&mut ChaCha8Rng::seed_from_u64(seed), 5);
        let opens = z.opens();
        prop_assert!(opens.contains(&z.empty_set()));
        prop_assert!(opens.contains(&z.full_set()));
        for u in &opens {
            for v in &opens {
                let mut j = u.clone();
                j.union_with(v);
                let mut m = u.clone();
                m.intersect_with(v);
                prop_assert!(opens.contains(&j) && opens.contains(&m));
            }
        }
        // exactly the up-closed subsets
        let up: Vec<PointSet> = all_subsets(z.len()).filter(|s| s.ones().all(|x| z.nbhd(x).is_subset(s))).collect();
        prop_assert_eq!(up.len(), opens.len());
    }

    #[test]
    fn preimages_of_opens_are_open(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_space(&mut rng, 4);
        let b = random_space(&mut rng, 4);
        let map: Vec<usize> = (0..a.len()).map(|_| rng.gen_range(0..b.len())).collect();
        let oracle = b.opens().iter().all(|v| a.is_open(&preimage(&map, a.len(), v)));
        prop_assert_eq!(is_continuous(&a, &b, &map), oracle);
        prop_assert_eq!(CMap::new(a, b, map).is_ok(), oracle);
    }

    #[test]
    fn local_hausdorffness_is_local_closedness_of_the_diagonal(seed in any::<u64>()) {
        let z = random_space(&mut ChaCha8Rng::seed_from_u64(seed), 5);
        let (sq, pairs) = product(&z, &z);
        let diag = set_from(sq.len(), (0..pairs.len()).filter(|&k| pairs[k].0 == pairs[k].1));
        let oracle = locally_hausdorff_oracle(&z);
        prop_assert_eq!(sq.is_locally_closed(&diag), oracle);
        prop_assert_eq!(z.is_locally_hausdorff(), oracle);
        prop_assert_eq!(z.is_locally_hausdorff_direct(), oracle);
    }

    #[test]
    fn every_subset_is_reported_consistently(seed in any::<u64>()) {
        // finite subsets are quasi-compact, so local closedness is decided by
        // closure alone: s is locally closed iff s is open in its closure
        let z = random_space(&mut ChaCha8Rng::seed_from_u64(seed), 4);
        for s in all_subsets(z.len()) {
            let cl = z.closure(&s);
            let open_in_closure = s.ones().all(|x| {
                let mut t = z.nbhd(x).clone();
                t.intersect_with(&cl);
                t.is_subset(&s)
            });
            prop_assert_eq!(z.is_locally_closed(&s), open_in_closure);
        }
    }

    #[test]
    fn space_json_round_trip(seed in any::<u64>()) {
        let z = random_space(&mut ChaCha8Rng::seed_from_u64(seed), 5);
        let text = serde_json::to_string(&z.to_data()).unwrap();
        let back: SpaceData = serde_json::from_str(&text).unwrap();
        let z2 = back.build().unwrap();
        prop_assert_eq!(z2.to_data(), z.to_data());
    }
}
