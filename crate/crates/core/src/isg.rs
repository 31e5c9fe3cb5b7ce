//! Finite inverse semigroups, the natural partial order, and bisection
//! semigroups of étale groupoids.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::SActionOnSpace;
use crate::fintop::{image, set_from, PointSet};
use crate::groupoid::FinGroupoid;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsgError {
    #[error("malformed semigroup data: {0}")]
    Malformed(String),
    #[error("not associative at ({0},{1},{2})")]
    NotAssociative(String, String, String),
    #[error("no unique generalized inverse for {0}")]
    NoUniqueGeneralizedInverse(String),
    #[error("idempotents {0} and {1} do not commute")]
    IdempotentsDoNotCommute(String, String),
    #[error("groupoid is not étale")]
    NotEtale,
    #[error("not a homomorphism at ({0},{1})")]
    NotHomomorphism(String, String),
    #[error("image of {0} is not a bisection")]
    NotABisection(String),
}

/// A finite inverse semigroup given by its multiplication table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvSemigroup {
    names: Vec<String>,
    table: Vec<usize>,
    star: Vec<usize>,
    idem: Vec<bool>,
    leq: Vec<bool>,
}

impl InvSemigroup {
    /// Verifies a row-major table (`verify_isg`).
    pub fn new<S: AsRef<str>>(elements: &[S], table: &[Vec<usize>]) -> Result<InvSemigroup, IsgError> {
        let names: Vec<String> = elements.iter().map(|e| e.as_ref().to_string()).collect();
        let n = names.len();
        if table.len() != n || table.iter().any(|row| row.len() != n || row.iter().any(|&v| v >= n)) {
            return Err(IsgError::Malformed("table must be a total n×n table over the elements".into()));
        }
        let mut sorted = names.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(IsgError::Malformed("duplicate element names".into()));
        }
        let flat: Vec<usize> = table.iter().flatten().copied().collect();
        let m = |a: usize, b: usize| flat[a * n + b];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if m(m(a, b), c) != m(a, m(b, c)) {
                        return Err(IsgError::NotAssociative(names[a].clone(), names[b].clone(), names[c].clone()));
                    }
                }
            }
        }
        let inverses: Vec<Vec<usize>> =
            (0..n).map(|x| (0..n).filter(|&y| m(m(x, y), x) == x && m(m(y, x), y) == y).collect()).collect();
        if let Some(x) = (0..n).find(|&x| inverses[x].is_empty()) {
            return Err(IsgError::NoUniqueGeneralizedInverse(names[x].clone()));
        }
        let idem: Vec<bool> = (0..n).map(|x| m(x, x) == x).collect();
        for e in (0..n).filter(|&e| idem[e]) {
            for f in (0..n).filter(|&f| idem[f]) {
                if m(e, f) != m(f, e) {
                    return Err(IsgError::IdempotentsDoNotCommute(names[e].clone(), names[f].clone()));
                }
            }
        }
        if let Some(x) = (0..n).find(|&x| inverses[x].len() != 1) {
            return Err(IsgError::NoUniqueGeneralizedInverse(names[x].clone()));
        }
        let star: Vec<usize> = inverses.iter().map(|v| v[0]).collect();
        let leq = (0..n).flat_map(|t| (0..n).map(move |u| (t, u))).map(|(t, u)| m(m(t, star[t]), u) == t).collect();
        Ok(InvSemigroup { names, table: flat, star, idem, leq })
    }

    /// A finite group as an inverse semigroup.
    pub fn cyclic_group(n: usize) -> InvSemigroup {
        let names: Vec<String> = (0..n).map(|k| k.to_string()).collect();
        let table: Vec<Vec<usize>> = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        InvSemigroup::new(&names, &table).unwrap()
    }

    pub fn trivial() -> InvSemigroup {
        InvSemigroup::new(&["1"], &[vec![0]]).unwrap()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn name(&self, t: usize) -> &str {
        &self.names[t]
    }
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
    pub fn el(&self, name: &str) -> usize {
        self.index_of(name).unwrap_or_else(|| panic!("no element {name}"))
    }
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.len() + b]
    }
    pub fn star(&self, a: usize) -> usize {
        self.star[a]
    }
    pub fn is_idempotent(&self, a: usize) -> bool {
        self.idem[a]
    }
    pub fn idempotents(&self) -> Vec<usize> {
        (0..self.len()).filter(|&e| self.idem[e]).collect()
    }
    /// Natural partial order `t ≤ u ⇔ t = t t* u`.
    pub fn leq(&self, t: usize, u: usize) -> bool {
        self.leq[t * self.len() + u]
    }
    /// Source idempotent `t*t`.
    pub fn src(&self, t: usize) -> usize {
        self.mul(self.star[t], t)
    }
    /// Range idempotent `tt*`.
    pub fn rng(&self, t: usize) -> usize {
        self.mul(t, self.star[t])
    }
    pub fn unit(&self) -> Option<usize> {
        (0..self.len()).find(|&e| (0..self.len()).all(|s| self.mul(e, s) == s && self.mul(s, e) == s))
    }
    pub fn zero(&self) -> Option<usize> {
        (0..self.len()).find(|&z| (0..self.len()).all(|s| self.mul(z, s) == z && self.mul(s, z) == z))
    }
    pub fn table(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.len().max(1)).take(self.len()).map(|r| r.to_vec()).collect()
    }

    /// Adjoins a fresh unit or zero; the new element is named `1` or `0`,
    /// with primes appended on clashes.
    pub fn adjoin(&self, what: Adjoin) -> InvSemigroup {
        let base = match what {
            Adjoin::Unit => "1",
            Adjoin::Zero => "0",
        };
        let mut name = base.to_string();
        while self.names.contains(&name) {
            name.push('\'');
        }
        let n = self.len();
        let mut names = self.names.clone();
        names.push(name);
        let table: Vec<Vec<usize>> = (0..=n)
            .map(|a| {
                (0..=n)
                    .map(|b| match (a == n, b == n, what) {
                        (false, false, _) => self.mul(a, b),
                        (true, true, _) => n,
                        (true, false, Adjoin::Unit) => b,
                        (false, true, Adjoin::Unit) => a,
                        (_, _, Adjoin::Zero) => n,
                    })
                    .collect()
            })
            .collect();
        InvSemigroup::new(&names, &table).expect("adjoining a unit or zero preserves inverse semigroups")
    }

    /// Adjoins a unit only if none exists.
    pub fn with_unit(&self) -> (InvSemigroup, bool) {
        match self.unit() {
            Some(_) => (self.clone(), false),
            None => (self.adjoin(Adjoin::Unit), true),
        }
    }

    /// Checks `f` is a homomorphism `self → target` preserving the involution.
    pub fn check_homomorphism(&self, target: &InvSemigroup, f: &[usize]) -> Result<(), IsgError> {
        if f.len() != self.len() || f.iter().any(|&v| v >= target.len()) {
            return Err(IsgError::Malformed("homomorphism has the wrong shape".into()));
        }
        for a in 0..self.len() {
            for b in 0..self.len() {
                if f[self.mul(a, b)] != target.mul(f[a], f[b]) {
                    return Err(IsgError::NotHomomorphism(self.names[a].clone(), self.names[b].clone()));
                }
            }
        }
        Ok(())
    }

    pub fn to_data(&self) -> SemigroupData {
        SemigroupData { elements: self.names.clone(), table: self.table() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjoin {
    Unit,
    Zero,
}

/// JSON form: element names and a row-major table of element names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemigroupData {
    pub elements: Vec<String>,
    pub table: Vec<Vec<usize>>,
}

impl SemigroupData {
    pub fn build(&self) -> Result<InvSemigroup, IsgError> {
        InvSemigroup::new(&self.elements, &self.table)
    }
}

/// The bisection semigroup of an étale groupoid, with the arrow set of
/// each element.
#[derive(Debug, Clone)]
pub struct Bisections {
    pub semigroup: InvSemigroup,
    pub sets: Vec<PointSet>,
}

impl Bisections {
    pub fn element_of(&self, set: &PointSet) -> Option<usize> {
        self.sets.iter().position(|s| s == set)
    }
}

/// Pointwise product of two arrow sets.
pub fn set_product(g: &FinGroupoid, u: &PointSet, v: &PointSet) -> PointSet {
    let mut out = set_from(g.n1(), []);
    for a in u.ones() {
        for b in v.ones() {
            if let Some(c) = g.mul(a, b) {
                out.insert(c);
            }
        }
    }
    out
}

pub fn set_inverse(g: &FinGroupoid, u: &PointSet) -> PointSet {
    set_from(g.n1(), u.ones().map(|a| g.inverse(a)))
}

/// Whether an arrow set is an open bisection.
pub fn is_bisection(g: &FinGroupoid, u: &PointSet) -> bool {
    let g1 = g.g1();
    if !g1.is_open(u) {
        return false;
    }
    for m in [g.r(), g.s()] {
        let els: Vec<usize> = u.ones().map(|a| m[a]).collect();
        if !crate::fintop::is_injective(&els) || !g.g0().is_open(&image(m, g.n0(), u)) {
            return false;
        }
        if u.ones().any(|a| image(m, g.n0(), g1.nbhd(a)) != *g.g0().nbhd(m[a])) {
            return false;
        }
    }
    true
}

/// All open bisections including `∅`, ordered by size and then by sorted
/// arrow names.  Elements are named by their arrow sets, e.g. `{1o,1c}`.
pub fn bisections(g: &FinGroupoid) -> Result<Bisections, IsgError> {
    if !g.predicates().etale {
        return Err(IsgError::NotEtale);
    }
    let n1 = g.n1();
    let mut found: Vec<PointSet> = Vec::new();
    fn rec(
        g: &FinGroupoid,
        a: usize,
        cur: &mut Vec<usize>,
        used_r: &mut Vec<bool>,
        used_s: &mut Vec<bool>,
        found: &mut Vec<PointSet>,
    ) {
        if a == g.n1() {
            let u = set_from(g.n1(), cur.iter().copied());
            if is_bisection(g, &u) {
                found.push(u);
            }
            return;
        }
        rec(g, a + 1, cur, used_r, used_s, found);
        let (x, y) = (g.r()[a], g.s()[a]);
        if !used_r[x] && !used_s[y] {
            used_r[x] = true;
            used_s[y] = true;
            cur.push(a);
            rec(g, a + 1, cur, used_r, used_s, found);
            cur.pop();
            used_r[x] = false;
            used_s[y] = false;
        }
    }
    rec(g, 0, &mut vec![], &mut vec![false; g.n0()], &mut vec![false; g.n0()], &mut found);
    let key = |u: &PointSet| {
        let mut v: Vec<&str> = u.ones().map(|a| g.g1().name(a)).collect();
        v.sort();
        (v.len(), v.join(","))
    };
    found.sort_by_key(|u| key(u));
    let _ = n1;
    let pos: HashMap<PointSet, usize> = found.iter().enumerate().map(|(k, u)| (u.clone(), k)).collect();
    let table: Vec<Vec<usize>> =
        found.iter().map(|u| found.iter().map(|v| pos[&set_product(g, u, v)]).collect()).collect();
    let names: Vec<String> = found.iter().map(|u| g.g1().fmt_set(u)).collect();
    let semigroup = InvSemigroup::new(&names, &table).expect("bisections form an inverse semigroup");
    Ok(Bisections { semigroup, sets: found })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WideReport {
    pub wide: bool,
    /// Arrows not covered by any `f(t)`.
    pub uncovered: Vec<String>,
    /// Pairs `(t,u)` where `f(t) ∩ f(u)` is not the union of `f(v)`, `v ≤ t,u`.
    pub intersection_failures: Vec<(String, String)>,
}

/// Checks that `f: S → Bis(G)` (given by arrow sets) is a homomorphism and
/// whether it is wide.
pub fn is_wide(s: &InvSemigroup, g: &FinGroupoid, f: &[PointSet]) -> Result<WideReport, IsgError> {
    if f.len() != s.len() {
        return Err(IsgError::Malformed("one arrow set per element required".into()));
    }
    for t in 0..s.len() {
        if !is_bisection(g, &f[t]) {
            return Err(IsgError::NotABisection(s.name(t).to_string()));
        }
    }
    for a in 0..s.len() {
        for b in 0..s.len() {
            if set_product(g, &f[a], &f[b]) != f[s.mul(a, b)] {
                return Err(IsgError::NotHomomorphism(s.name(a).into(), s.name(b).into()));
            }
        }
        if set_inverse(g, &f[a]) != f[s.star(a)] {
            return Err(IsgError::NotHomomorphism(s.name(a).into(), "*".into()));
        }
    }
    let mut all = set_from(g.n1(), []);
    for u in f {
        all.union_with(u);
    }
    let uncovered: Vec<String> =
        (0..g.n1()).filter(|&a| !all.contains(a)).map(|a| g.g1().name(a).to_string()).collect();
    let mut intersection_failures = Vec::new();
    for t in 0..s.len() {
        for u in 0..s.len() {
            let mut meet = f[t].clone();
            meet.intersect_with(&f[u]);
            let mut lower = set_from(g.n1(), []);
            for v in (0..s.len()).filter(|&v| s.leq(v, t) && s.leq(v, u)) {
                lower.union_with(&f[v]);
            }
            if meet != lower {
                intersection_failures.push((s.name(t).to_string(), s.name(u).to_string()));
            }
        }
    }
    Ok(WideReport { wide: uncovered.is_empty() && intersection_failures.is_empty(), uncovered, intersection_failures })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZIsoFailure {
    /// Condition (1) fails: germs of `t1`, `t2` agree in `Ŝ` at `z` but not in `S`.
    Injectivity { t1: String, t2: String, z: String },
    /// Condition (2) fails: the germ of `u` at `z` is not hit.
    Surjectivity { u: String, z: String },
}

/// Checks whether `φ: S → Ŝ` induces an isomorphism of germ groupoids for
/// the given action of `Ŝ` on a space.
pub fn z_isomorphism_check(
    s: &InvSemigroup,
    phi: &[usize],
    action: &SActionOnSpace,
) -> Result<Option<ZIsoFailure>, IsgError> {
    let sh = action.semigroup();
    s.check_homomorphism(sh, phi)?;
    let z = action.space();
    let dom = |t: usize| action.domain(t);
    let dom_s = |t: usize| dom(phi[t]);
    for t1 in 0..s.len() {
        for t2 in 0..s.len() {
            for zz in 0..z.len() {
                if !(dom_s(t1).contains(zz) && dom_s(t2).contains(zz)) {
                    continue;
                }
                let agree_hat = sh
                    .idempotents()
                    .into_iter()
                    .any(|f| dom(f).contains(zz) && sh.mul(phi[t1], f) == sh.mul(phi[t2], f));
                if !agree_hat {
                    continue;
                }
                let agree = s.idempotents().into_iter().any(|e| dom_s(e).contains(zz) && s.mul(t1, e) == s.mul(t2, e));
                if !agree {
                    return Ok(Some(ZIsoFailure::Injectivity {
                        t1: s.name(t1).into(),
                        t2: s.name(t2).into(),
                        z: z.name(zz).into(),
                    }));
                }
            }
        }
    }
    for u in 0..sh.len() {
        for zz in 0..z.len() {
            if !dom(u).contains(zz) {
                continue;
            }
            let hit = (0..s.len()).any(|t| {
                dom_s(t).contains(zz)
                    && sh.idempotents().into_iter().any(|f| dom(f).contains(zz) && sh.mul(u, f) == sh.mul(phi[t], f))
            });
            if !hit {
                return Ok(Some(ZIsoFailure::Surjectivity { u: sh.name(u).into(), z: z.name(zz).into() }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn s3_order() {
        let s = fixtures::s3();
        let (one, e, g) = (s.el("1"), s.el("e"), s.el("g"));
        assert_eq!(s.idempotents(), vec![one, e]);
        assert!(s.leq(e, one) && s.leq(e, g));
        assert!(!s.leq(one, g) && !s.leq(g, one));
        assert_eq!(s.star(g), g);
    }

    #[test]
    fn left_zero_semigroup_fails() {
        let r = InvSemigroup::new(&["x", "y"], &[vec![0, 0], vec![1, 1]]);
        assert_eq!(r.unwrap_err(), IsgError::IdempotentsDoNotCommute("x".into(), "y".into()));
    }

    #[test]
    fn adjoin_zero_and_unit() {
        let s = fixtures::s3();
        let s0 = s.adjoin(Adjoin::Zero);
        assert_eq!(s0.len(), 4);
        let z = s0.zero().unwrap();
        assert!((0..4).all(|t| s0.leq(z, t)));

        let g = InvSemigroup::cyclic_group(2);
        let g1 = g.adjoin(Adjoin::Unit);
        let new = g1.unit().unwrap();
        assert_eq!(g1.name(new), "1'");
        assert!(g1.leq(g1.el("0"), new));
        assert_eq!(g.adjoin(Adjoin::Unit).adjoin(Adjoin::Unit).len(), 4);
    }

    #[test]
    fn bisections_of_gm() {
        let gm = fixtures::gm();
        let b = bisections(&gm).unwrap();
        let names: Vec<&str> = b.semigroup.names().iter().map(|s| s.as_str()).collect();
        assert_eq!(names, vec!["{}", "{1o}", "{1c,1o}", "{1o,g-}"]);
        let sg = &b.semigroup;
        let g = sg.el("{1o,g-}");
        assert_eq!(sg.mul(g, g), sg.el("{1c,1o}"));
        assert_eq!(sg.zero(), Some(sg.el("{}")));
        assert_eq!(sg.unit(), Some(sg.el("{1c,1o}")));
    }

    #[test]
    fn bisections_of_pair_groupoid() {
        let p2 = FinGroupoid::pair(&["a", "b"]);
        assert_eq!(bisections(&p2).unwrap().semigroup.len(), 7);
    }
}
