//! Small named examples used by the tests, the CLI and the reports.

use std::sync::Arc;

use crate::bibundle::PartialEquivalence;
use crate::fintop::{set_from, FinSpace};
use crate::groupoid::{cech_groupoid, FinGroupoid};
use crate::isg::InvSemigroup;

/// The Sierpiński space `{c, o}` with `{o}` open.
pub fn sigma() -> FinSpace {
    FinSpace::sierpinski()
}

/// The groupoid over `Σ` with arrows `1o`, `1c` and an extra arrow `g-`
/// of order two at `c`; `1c` and `g-` cannot be separated.
pub fn gm() -> FinGroupoid {
    let g0 = sigma();
    let names: Vec<String> = ["1o", "1c", "g-"].iter().map(|s| s.to_string()).collect();
    let nb = vec![set_from(3, [0]), set_from(3, [0, 1]), set_from(3, [0, 2])];
    let g1 = FinSpace::from_neighbourhoods(names, nb).unwrap();
    let (c, o) = (0, 1);
    let r = vec![o, c, c];
    let mut mult = vec![None; 9];
    let mut set = |a: usize, b: usize, v: usize| mult[a * 3 + b] = Some(v);
    set(0, 0, 0);
    set(1, 1, 1);
    set(1, 2, 2);
    set(2, 1, 2);
    set(2, 2, 1);
    FinGroupoid::new(g0, g1, r.clone(), r, mult).unwrap()
}

/// `S3 = {1, e, g}` with `g² = 1`, `e² = e`, `eg = ge = e`.
pub fn s3() -> InvSemigroup {
    InvSemigroup::new(&["1", "e", "g"], &[vec![0, 1, 2], vec![1, 1, 1], vec![2, 1, 0]]).unwrap()
}

/// The slices of `Gm` indexed by `S3`: `L₁ = {1o,1c}`, `L_e = {1o}`,
/// `L_g = {1o,g-}`.
pub fn gm_slices() -> Vec<Vec<&'static str>> {
    vec![vec!["1o", "1c"], vec!["1o"], vec!["1o", "g-"]]
}

/// The slice `L_g = {1o, g-}` of `Gm` as a global self-equivalence of
/// the space groupoid `Σ = L₁`.
pub fn l_g() -> PartialEquivalence {
    let g = Arc::new(FinGroupoid::space(&sigma()));
    let gm = gm();
    let (x, inc) = gm.g1().subspace(&gm.g1().set_of(&["1o", "g-"]).unwrap());
    let r: Vec<usize> = inc.iter().map(|&p| gm.r()[p]).collect();
    let n = x.len();
    let mut left = vec![None; g.n1() * n];
    let mut right = vec![None; n * g.n1()];
    for (k, &z) in r.iter().enumerate() {
        left[z * n + k] = Some(k);
        right[k * g.n1() + z] = Some(k);
    }
    PartialEquivalence::new(g.clone(), g, x, r.clone(), r, left, right).unwrap()
}

/// The discrete space `{a, b, c}` with the cover `{a,b}`, `{b,c}`.
pub fn cech3_cover() -> (FinSpace, Vec<crate::fintop::PointSet>) {
    let z = FinSpace::discrete(&["a", "b", "c"]);
    let cover = vec![z.set_of(&["a", "b"]).unwrap(), z.set_of(&["b", "c"]).unwrap()];
    (z, cover)
}

/// Čech groupoid of [`cech3_cover`].
pub fn cech3() -> FinGroupoid {
    let (z, cover) = cech3_cover();
    cech_groupoid(&z, &cover).unwrap()
}

/// Pair groupoid on two points.
pub fn p2() -> FinGroupoid {
    FinGroupoid::pair(&["a", "b"])
}

/// The swap on the discrete space `{a, b}`.
pub fn d2() -> FinSpace {
    FinSpace::discrete(&["a", "b"])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(gm().n1(), 3);
        assert_eq!(s3().len(), 3);
        assert_eq!(l_g().len(), 2);
        assert_eq!(cech3().n1(), 6);
        assert_eq!(p2().n1(), 4);
    }
}
