//! Seeded generators of small spaces, actions and gradings for property
//! suites.  Every generated object is verified by its constructor.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::action::{germ_groupoid, grading_from_cocycle, SActionOnSpace, SGradedGroupoid};
use crate::fintop::{image, set_from, FinSpace, PointSet};
use crate::groupoid::FinGroupoid;
use crate::isg::InvSemigroup;

/// Largest arrow space produced by [`random_grading`].
pub const MAX_ARROWS: usize = 8;

/// A space on 1–`max_points` points from a random preorder.
pub fn random_space<R: Rng>(rng: &mut R, max_points: usize) -> FinSpace {
    let n = rng.gen_range(1..=max_points.max(1));
    let mut rel = vec![vec![false; n]; n];
    for (i, row) in rel.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = i == j || rng.gen_bool(0.25);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if rel[i][k] && rel[k][j] {
                    rel[i][j] = true;
                }
            }
        }
    }
    let names: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
    let nbhd = rel.iter().map(|row| set_from(n, (0..n).filter(|&j| row[j]))).collect();
    FinSpace::from_neighbourhoods(names, nbhd).expect("transitive closure gives a topology")
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// All self-homeomorphisms.
pub fn homeomorphisms(z: &FinSpace) -> Vec<Vec<usize>> {
    permutations(z.len())
        .into_iter()
        .filter(|p| (0..z.len()).all(|x| image(p, z.len(), z.nbhd(x)) == *z.nbhd(p[x])))
        .collect()
}

fn power(h: &[usize], k: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..h.len()).collect();
    for _ in 0..k {
        p = p.iter().map(|&x| h[x]).collect();
    }
    p
}

fn partial_id(n: usize, u: &PointSet) -> Vec<Option<usize>> {
    (0..n).map(|p| u.contains(p).then_some(p)).collect()
}

fn restricted(h: &[usize], u: &PointSet) -> Vec<Option<usize>> {
    (0..h.len()).map(|p| u.contains(p).then_some(h[p])).collect()
}

fn total(h: &[usize]) -> Vec<Option<usize>> {
    h.iter().map(|&x| Some(x)).collect()
}

fn pick<'a, T, R: Rng>(rng: &mut R, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("nonempty choice")
}

/// A random action of a small inverse semigroup with unit (at most four
/// elements) on a random space.
pub fn random_space_action<R: Rng>(rng: &mut R, max_points: usize) -> SActionOnSpace {
    loop {
        let z = random_space(rng, max_points);
        let n = z.len();
        let opens = z.opens();
        let homeos = homeomorphisms(&z);
        let id = total(&(0..n).collect::<Vec<_>>());
        let involutions: Vec<&Vec<usize>> = homeos.iter().filter(|h| power(h, 2) == power(h, 0)).collect();
        let (s, theta) = match rng.gen_range(0..7) {
            0 => {
                let k = rng.gen_range(1..=4);
                let cands: Vec<&Vec<usize>> = homeos.iter().filter(|h| power(h, k) == power(h, 0)).collect();
                let h = *pick(rng, &cands);
                (InvSemigroup::cyclic_group(k), (0..k).map(|j| total(&power(h, j))).collect())
            }
            1 => {
                let u = pick(rng, &opens);
                let s = InvSemigroup::new(&["1", "e"], &[vec![0, 1], vec![1, 1]]).unwrap();
                (s, vec![id.clone(), partial_id(n, u)])
            }
            2 => {
                let (u, v) = (pick(rng, &opens), pick(rng, &opens));
                let mut uv = u.clone();
                uv.intersect_with(v);
                let t = (0..4).map(|a| (0..4).map(|b| a | b).collect()).collect::<Vec<Vec<usize>>>();
                let s = InvSemigroup::new(&["1", "e", "f", "ef"], &t).unwrap();
                (s, vec![id.clone(), partial_id(n, u), partial_id(n, v), partial_id(n, &uv)])
            }
            3 => {
                let u = pick(rng, &opens).clone();
                let mut v = pick(rng, &opens).clone();
                v.intersect_with(&u);
                let t = (0..3).map(|a| (0..3).map(|b| a.max(b)).collect()).collect::<Vec<Vec<usize>>>();
                let s = InvSemigroup::new(&["1", "e", "f"], &t).unwrap();
                (s, vec![id.clone(), partial_id(n, &u), partial_id(n, &v)])
            }
            4 => {
                let h = *pick(rng, &involutions);
                let fixed: Vec<&PointSet> = opens.iter().filter(|u| u.ones().all(|p| h[p] == p)).collect();
                let u = *pick(rng, &fixed);
                (crate::fixtures::s3(), vec![id.clone(), partial_id(n, u), total(h)])
            }
            5 => {
                let h = *pick(rng, &involutions);
                let inv: Vec<&PointSet> = opens.iter().filter(|u| image(h, n, u) == **u).collect();
                let u = *pick(rng, &inv);
                // (a, x) with a ∈ Z/2, x ∈ {1, e}: index 2a + x
                let t = (0..4)
                    .map(|p| (0..4).map(|q| ((p / 2 + q / 2) % 2) * 2 + ((p % 2) | (q % 2))).collect())
                    .collect::<Vec<Vec<usize>>>();
                let s = InvSemigroup::new(&["1", "e", "g", "ge"], &t).unwrap();
                (s, vec![id.clone(), partial_id(n, u), total(h), restricted(h, u)])
            }
            _ => {
                let h = *pick(rng, &involutions);
                let s = InvSemigroup::new(&["1", "g", "0"], &[vec![0, 1, 2], vec![1, 0, 2], vec![2, 2, 2]]).unwrap();
                (s, vec![id.clone(), total(h), vec![None; n]])
            }
        };
        if let Ok(a) = SActionOnSpace::new(s, z, theta) {
            return a;
        }
    }
}

/// `P_k × Z/m` with a cocycle `(x, y, a) ↦ a + c(x) − c(y) mod n`.
fn random_cocycle_grading<R: Rng>(rng: &mut R) -> SGradedGroupoid {
    let (k, m) = *pick(rng, &[(1, 1), (1, 2), (1, 4), (2, 1), (2, 2), (1, 3)]);
    let divisors: Vec<usize> = (1..=m).filter(|d| m % d == 0).collect();
    let n = *pick(rng, &divisors);
    let arrows: Vec<(usize, usize, usize)> =
        (0..k).flat_map(|x| (0..k).flat_map(move |y| (0..m).map(move |a| (x, y, a)))).collect();
    let names: Vec<String> = arrows.iter().map(|(x, y, a)| format!("({x},{y},{a})")).collect();
    let g0 = FinSpace::discrete(&(0..k).map(|x| format!("x{x}")).collect::<Vec<_>>());
    let g1 = FinSpace::discrete(&names);
    let na = arrows.len();
    let pos = |x: usize, y: usize, a: usize| (x * k + y) * m + a;
    let mut mult = vec![None; na * na];
    for (i, &(x, y, a)) in arrows.iter().enumerate() {
        for (j, &(y2, z, b)) in arrows.iter().enumerate() {
            if y == y2 {
                mult[i * na + j] = Some(pos(x, z, (a + b) % m));
            }
        }
    }
    let r = arrows.iter().map(|a| a.0).collect();
    let s = arrows.iter().map(|a| a.1).collect();
    let h = Arc::new(FinGroupoid::new(g0, g1, r, s, mult).expect("product of a pair groupoid and a cyclic group"));
    let c: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
    let pi: Vec<usize> = arrows.iter().map(|&(x, y, a)| (a + c[x] + n - c[y]) % n).collect();
    grading_from_cocycle(&h, &InvSemigroup::cyclic_group(n), &pi).expect("coboundary-twisted reduction is a cocycle")
}

/// A random saturated grading with `|S| ≤ 4` and `|L¹| ≤ 8`.
pub fn random_grading<R: Rng>(rng: &mut R) -> SGradedGroupoid {
    loop {
        let gr = if rng.gen_bool(0.7) {
            let a = random_space_action(rng, 4);
            match germ_groupoid(&a) {
                Ok(g) => g,
                Err(_) => continue,
            }
        } else {
            random_cocycle_grading(rng)
        };
        if gr.groupoid().n1() <= MAX_ARROWS && gr.is_saturated() {
            return gr;
        }
    }
}
