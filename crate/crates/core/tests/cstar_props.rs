use num_complex::Complex;
use peqlib::action::SGradedGroupoid;
use peqlib::cstar::{
    fell_bundle_from_grading, fmt_scalar, groupoid_algebra, int, kernel, matrix_model, parse_scalar, rat, CstarError,
    FellBundle, MatSpace, Matrix, Scalar,
};
use peqlib::fixtures;
use peqlib::groupoid::FinGroupoid;
use peqlib::random::random_grading;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn within(a: &MatSpace, b: &MatSpace) -> bool {
    a.basis().iter().all(|m| b.contains(m))
}

fn check_fibres(f: &FellBundle, s: &peqlib::isg::InvSemigroup) -> Result<(), TestCaseError> {
    for t in 0..s.len() {
        let m = f.fibre(t);
        let ms = m.adjoint();
        let left = f.fibre(s.mul(t, s.star(t)));
        let right = f.fibre(s.mul(s.star(t), t));
        // M·M*·M = M, and M·M*, M*·M are ideals of the unit-like fibres
        prop_assert!(m.product(&ms).product(m) == *m);
        let mm = m.product(&ms);
        prop_assert!(within(&mm, left) && within(&left.product(&mm), &mm) && within(&mm.product(left), &mm));
        let mm2 = ms.product(m);
        prop_assert!(within(&mm2, right) && within(&right.product(&mm2), &mm2));
        // x*x ≥ 0 for a basis
        for x in m.basis() {
            prop_assert!(x.adjoint().mul(x).is_psd());
        }
        // the fibre over t* is the only candidate K with MKM = M, KMK = K
        let mut duals: Vec<&MatSpace> = Vec::new();
        for u in 0..s.len() {
            let k = f.fibre(u);
            if m.product(k).product(m) == *m && k.product(m).product(k) == *k && !duals.contains(&k) {
                duals.push(k);
            }
        }
        prop_assert_eq!(duals.len(), 1);
        prop_assert!(*duals[0] == ms);
        if s.is_idempotent(t) {
            prop_assert!(m.product(m) == *m && m.adjoint() == *m);
            let unit = f.fibre(s.unit().unwrap());
            prop_assert!(within(&unit.product(m), m) && within(&m.product(unit), m));
        }
    }
    Ok(())
}

fn check_bundle(gr: &SGradedGroupoid) -> Result<(), TestCaseError> {
    let f = fell_bundle_from_grading(gr).unwrap();
    let sect = f.section_algebra().unwrap();
    let l = gr.groupoid();
    prop_assert_eq!(sect.algebra.dim(), l.n1());
    // blocks split over ℚ(i) exactly when those of the groupoid algebra do
    match (sect.blocks.clone(), groupoid_algebra(l).blocks()) {
        (Some(mut a), Ok(mut b)) => {
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
        (None, Err(CstarError::NotSplit(_))) => {}
        (a, b) => prop_assert!(false, "section blocks {a:?} vs groupoid algebra {b:?}"),
    }
    let k = f.e_map_kernel();
    let total: usize = gr.slices().iter().map(|s| s.count_ones(..)).sum();
    prop_assert_eq!(k.dim, total - l.n1());
    prop_assert!(k.spanned_by_relations);
    prop_assert!(f.bimodule_report().failures.is_empty());
    check_fibres(&f, gr.semigroup())
}

#[test]
fn matrix_model_fibres() {
    let mm = matrix_model();
    assert_eq!(mm.bundle.dims(), vec![6, 4, 6]);
    check_fibres(&mm.bundle, &fixtures::s3()).unwrap();
    assert!(mm.bundle.bimodule_report().failures.is_empty());
}

#[test]
fn cyclic_group_algebras() {
    let mut z4 = groupoid_algebra(&FinGroupoid::cyclic(4)).blocks().unwrap();
    z4.sort();
    assert_eq!(z4, vec![1, 1, 1, 1]);
    assert_eq!(groupoid_algebra(&fixtures::p2()).blocks().unwrap(), vec![2]);
    // Z/3 needs cube roots of unity, which are not Gaussian rationals
    assert!(groupoid_algebra(&FinGroupoid::cyclic(3)).blocks().is_err());
}

#[test]
fn scalar_formatting() {
    assert_eq!(fmt_scalar(&int(3)), "3");
    assert_eq!(fmt_scalar(&Complex::new(rat(-1, 2), rat(0, 1))), "-1/2");
    let z: Scalar = Complex::new(rat(1, 3), rat(2, 1));
    assert_eq!(parse_scalar(&fmt_scalar(&z)).unwrap(), z);
}

#[test]
fn psd_examples() {
    assert!(Matrix::identity(3).is_psd());
    assert!(!Matrix::identity(2).scale(&int(-1)).is_psd());
    assert!(Matrix::from_ints(&[&[1, 1], &[1, 1]]).is_psd());
    assert!(!Matrix::from_ints(&[&[0, 1], &[1, 0]]).is_psd());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bundles_from_random_gradings(seed in any::<u64>()) {
        let gr = random_grading(&mut ChaCha8Rng::seed_from_u64(seed));
        check_bundle(&gr)?;
    }

    #[test]
    fn gram_matrices_are_positive(entries in proptest::collection::vec((-3i64..=3, -3i64..=3), 9)) {
        let a = Matrix::from_fn(3, |i, j| {
            let (re, im) = entries[3 * i + j];
            Complex::new(rat(re, 1), rat(im, 1))
        });
        prop_assert!(a.adjoint().mul(&a).is_psd());
        prop_assert!(a.adjoint().mul(&a).is_hermitian());
    }

    #[test]
    fn rank_plus_nullity(rows in proptest::collection::vec(proptest::collection::vec(-2i64..=2, 3), 1..5)) {
        let images: Vec<Vec<Scalar>> = rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect();
        let (basis, rank) = kernel(&images, 3);
        prop_assert_eq!(basis.len() + rank, images.len());
    }

    #[test]
    fn scalars_round_trip(re in (-50i64..50, 1i64..20), im in (-50i64..50, 1i64..20)) {
        let z: Scalar = Complex::new(rat(re.0, re.1), rat(im.0, im.1));
        prop_assert_eq!(parse_scalar(&fmt_scalar(&z)).unwrap(), z);
    }
}
