//! Partial equivalences between finite groupoids.
//!
//! A partial equivalence from `H` to `G` is a space `X` with anchors
//! `r: X → G⁰`, `s: X → H⁰`, a left `G`-action and a right `H`-action.
//! Both action tables are stored explicitly, indexed by `(arrow, point)` and
//! `(point, arrow)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fintop::{
    fiber_product, first_discontinuity, image, is_embedding, is_homeomorphism, is_open_map, set_from, FinSpace,
    PointSet, SpaceData, TopError,
};
use crate::groupoid::{FinGroupoid, GroupoidData, GroupoidError, UnionFind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PeqError {
    #[error(transparent)]
    Top(#[from] TopError),
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
    #[error("malformed bibundle data: {0}")]
    Malformed(String),
    #[error("action defect: {0}")]
    ActionDefect(String),
    #[error("anchor map is not open: {0}")]
    AnchorNotOpen(String),
    #[error("shear map is not bijective: {0}")]
    P3NotBijective(String),
    #[error("shear map is bijective but not a homeomorphism: {0}")]
    P3NotHomeomorphism(String),
    #[error("groupoids of the operands do not match")]
    GroupoidMismatch,
    #[error("subset is not invariant or not open: {0}")]
    NotInvariant(String),
    #[error("not a bibundle isomorphism: {0}")]
    NotIsomorphism(String),
    #[error("no such structure: {0}")]
    NoSuchStructure(String),
    #[error("not a homeomorphism between open subsets: {0}")]
    NotHomeomorphism(String),
}

/// A partial equivalence from `right` to `left`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialEquivalence {
    g: Arc<FinGroupoid>,
    h: Arc<FinGroupoid>,
    x: FinSpace,
    r: Vec<usize>,
    s: Vec<usize>,
    left: Vec<Option<usize>>,
    right: Vec<Option<usize>>,
}

impl PartialEquivalence {
    /// Verifies P1–P4 (`verify_partial_equivalence`).
    pub fn new(
        g: Arc<FinGroupoid>,
        h: Arc<FinGroupoid>,
        x: FinSpace,
        r: Vec<usize>,
        s: Vec<usize>,
        left: Vec<Option<usize>>,
        right: Vec<Option<usize>>,
    ) -> Result<PartialEquivalence, PeqError> {
        let nx = x.len();
        if r.len() != nx || s.len() != nx || left.len() != g.n1() * nx || right.len() != nx * h.n1() {
            return Err(PeqError::Malformed("table sizes do not match".into()));
        }
        if r.iter().any(|&v| v >= g.n0()) || s.iter().any(|&v| v >= h.n0()) {
            return Err(PeqError::Malformed("anchor out of range".into()));
        }
        if left.iter().chain(&right).flatten().any(|&v| v >= nx) {
            return Err(PeqError::Malformed("action value out of range".into()));
        }
        let p = PartialEquivalence { g, h, x, r, s, left, right };
        p.verify()?;
        Ok(p)
    }

    fn verify(&self) -> Result<(), PeqError> {
        let (g, h, x) = (&*self.g, &*self.h, &self.x);
        let nx = x.len();
        let xn = |i: usize| x.name(i).to_string();
        let gn = |i: usize| g.g1().name(i).to_string();
        let hn = |i: usize| h.g1().name(i).to_string();
        if let Some(p) = first_discontinuity(x, g.g0(), &self.r) {
            return Err(PeqError::ActionDefect(format!("r not continuous at {}", xn(p))));
        }
        if let Some(p) = first_discontinuity(x, h.g0(), &self.s) {
            return Err(PeqError::ActionDefect(format!("s not continuous at {}", xn(p))));
        }
        // domains and P1
        for a in 0..g.n1() {
            for p in 0..nx {
                let v = self.act_left(a, p);
                if (g.s()[a] == self.r[p]) != v.is_some() {
                    return Err(PeqError::ActionDefect(format!("left action domain at ({},{})", gn(a), xn(p))));
                }
                if let Some(q) = v {
                    if self.s[q] != self.s[p] || self.r[q] != g.r()[a] {
                        return Err(PeqError::ActionDefect(format!("anchors of {}·{}", gn(a), xn(p))));
                    }
                }
            }
        }
        for p in 0..nx {
            for b in 0..h.n1() {
                let v = self.act_right(p, b);
                if (self.s[p] == h.r()[b]) != v.is_some() {
                    return Err(PeqError::ActionDefect(format!("right action domain at ({},{})", xn(p), hn(b))));
                }
                if let Some(q) = v {
                    if self.s[q] != h.s()[b] || self.r[q] != self.r[p] {
                        return Err(PeqError::ActionDefect(format!("anchors of {}·{}", xn(p), hn(b))));
                    }
                }
            }
        }
        // P2 and unit laws
        for p in 0..nx {
            if self.act_left(g.unit(self.r[p]), p) != Some(p) || self.act_right(p, h.unit(self.s[p])) != Some(p) {
                return Err(PeqError::ActionDefect(format!("units do not act trivially on {}", xn(p))));
            }
            for a2 in 0..g.n1() {
                let Some(q) = self.act_left(a2, p) else { continue };
                for a1 in 0..g.n1() {
                    if let (Some(l), Some(a12)) = (self.act_left(a1, q), g.mul(a1, a2)) {
                        if self.act_left(a12, p) != Some(l) {
                            return Err(PeqError::ActionDefect(format!(
                                "left associativity at ({},{},{})",
                                gn(a1),
                                gn(a2),
                                xn(p)
                            )));
                        }
                    }
                }
                for b in 0..h.n1() {
                    if let Some(pb) = self.act_right(p, b) {
                        if self.act_right(q, b) != self.act_left(a2, pb) {
                            return Err(PeqError::ActionDefect(format!(
                                "actions do not commute at ({},{},{})",
                                gn(a2),
                                xn(p),
                                hn(b)
                            )));
                        }
                    }
                }
            }
            for b1 in 0..h.n1() {
                let Some(q) = self.act_right(p, b1) else { continue };
                for b2 in 0..h.n1() {
                    if let (Some(l), Some(b12)) = (self.act_right(q, b2), h.mul(b1, b2)) {
                        if self.act_right(p, b12) != Some(l) {
                            return Err(PeqError::ActionDefect(format!(
                                "right associativity at ({},{},{})",
                                xn(p),
                                hn(b1),
                                hn(b2)
                            )));
                        }
                    }
                }
            }
        }
        // continuity of the actions
        let (gx, gx_pairs) = fiber_product(g.g1(), g.s(), x, &self.r);
        let lact: Vec<usize> = gx_pairs.iter().map(|&(a, p)| self.act_left(a, p).unwrap()).collect();
        if let Some(k) = first_discontinuity(&gx, x, &lact) {
            return Err(PeqError::ActionDefect(format!("left action not continuous at {}", gx.name(k))));
        }
        let (xh, xh_pairs) = fiber_product(x, &self.s, h.g1(), h.r());
        let ract: Vec<usize> = xh_pairs.iter().map(|&(p, b)| self.act_right(p, b).unwrap()).collect();
        if let Some(k) = first_discontinuity(&xh, x, &ract) {
            return Err(PeqError::ActionDefect(format!("right action not continuous at {}", xh.name(k))));
        }
        // P3
        let (xsx, xsx_pairs) = fiber_product(x, &self.s, x, &self.s);
        let (xrx, xrx_pairs) = fiber_product(x, &self.r, x, &self.r);
        let pos_s: HashMap<(usize, usize), usize> = xsx_pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let pos_r: HashMap<(usize, usize), usize> = xrx_pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let sh1: Vec<usize> = gx_pairs.iter().zip(&lact).map(|(&(_, p), &q)| pos_s[&(p, q)]).collect();
        let sh2: Vec<usize> = xh_pairs.iter().zip(&ract).map(|(&(p, _), &q)| pos_r[&(p, q)]).collect();
        for (dom, cod, f, label) in [(&gx, &xsx, &sh1, "(g,x) ↦ (x,g·x)"), (&xh, &xrx, &sh2, "(x,h) ↦ (x,x·h)")] {
            if !crate::fintop::is_injective(f) || dom.len() != cod.len() {
                let witness = first_bijectivity_witness(dom, cod, f);
                return Err(PeqError::P3NotBijective(format!("{label}: {witness}")));
            }
            if !is_homeomorphism(dom, cod, f) {
                return Err(PeqError::P3NotHomeomorphism(label.into()));
            }
        }
        // P4
        if !is_open_map(x, g.g0(), &self.r) {
            return Err(PeqError::AnchorNotOpen("r".into()));
        }
        if !is_open_map(x, h.g0(), &self.s) {
            return Err(PeqError::AnchorNotOpen("s".into()));
        }
        // r(X) and s(X) are open and invariant, so X restricts to a global
        // equivalence between the restricted groupoids
        let (rx, sx) = (self.range_set(), self.source_set());
        if !g.is_invariant(&rx) || !h.is_invariant(&sx) {
            return Err(PeqError::NotInvariant("anchor image".into()));
        }
        Ok(())
    }

    pub fn left(&self) -> &FinGroupoid {
        &self.g
    }
    pub fn right(&self) -> &FinGroupoid {
        &self.h
    }
    pub fn left_arc(&self) -> Arc<FinGroupoid> {
        self.g.clone()
    }
    pub fn right_arc(&self) -> Arc<FinGroupoid> {
        self.h.clone()
    }
    pub fn space(&self) -> &FinSpace {
        &self.x
    }
    pub fn r(&self) -> &[usize] {
        &self.r
    }
    pub fn s(&self) -> &[usize] {
        &self.s
    }
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    pub fn act_left(&self, g: usize, x: usize) -> Option<usize> {
        self.left[g * self.x.len() + x]
    }
    pub fn act_right(&self, x: usize, h: usize) -> Option<usize> {
        self.right[x * self.h.n1() + h]
    }
    pub fn range_set(&self) -> PointSet {
        image(&self.r, self.g.n0(), &self.x.full_set())
    }
    pub fn source_set(&self) -> PointSet {
        image(&self.s, self.h.n0(), &self.x.full_set())
    }
    pub fn is_global(&self) -> bool {
        self.range_set().count_ones(..) == self.g.n0() && self.source_set().count_ones(..) == self.h.n0()
    }

    /// The unique `g` with `x1 = g·x2` (requires `s(x1) = s(x2)`).
    pub fn left_pairing(&self, x1: usize, x2: usize) -> Option<usize> {
        if self.s[x1] != self.s[x2] {
            return None;
        }
        let mut it = (0..self.g.n1()).filter(|&a| self.act_left(a, x2) == Some(x1));
        let a = it.next()?;
        it.next().is_none().then_some(a)
    }

    /// The unique `h` with `x2 = x1·h` (requires `r(x1) = r(x2)`).
    pub fn right_pairing(&self, x1: usize, x2: usize) -> Option<usize> {
        if self.r[x1] != self.r[x2] {
            return None;
        }
        let mut it = (0..self.h.n1()).filter(|&b| self.act_right(x1, b) == Some(x2));
        let b = it.next()?;
        it.next().is_none().then_some(b)
    }

    /// The restriction to a global equivalence between `G_{r(X)}` and `H_{s(X)}`.
    pub fn as_global(&self) -> Result<PartialEquivalence, PeqError> {
        let gu = Arc::new(self.g.restrict(&self.range_set())?);
        let hv = Arc::new(self.h.restrict(&self.source_set())?);
        let gmap = index_by_name(self.g.g1(), gu.g1());
        let hmap = index_by_name(self.h.g1(), hv.g1());
        let g0map = index_by_name(self.g.g0(), gu.g0());
        let h0map = index_by_name(self.h.g0(), hv.g0());
        let nx = self.x.len();
        let mut left = vec![None; gu.n1() * nx];
        for a in 0..self.g.n1() {
            if let Some(a2) = gmap[a] {
                for p in 0..nx {
                    left[a2 * nx + p] = self.act_left(a, p);
                }
            }
        }
        let mut right = vec![None; nx * hv.n1()];
        for p in 0..nx {
            for b in 0..self.h.n1() {
                if let Some(b2) = hmap[b] {
                    right[p * hv.n1() + b2] = self.act_right(p, b);
                }
            }
        }
        let r = self.r.iter().map(|&v| g0map[v].unwrap()).collect();
        let s = self.s.iter().map(|&v| h0map[v].unwrap()).collect();
        PartialEquivalence::new(gu, hv, self.x.clone(), r, s, left, right)
    }

    /// For space groupoids: the partial homeomorphism `s(x) ↦ r(x)`.
    pub fn to_partial_homeo(&self) -> Option<(PointSet, Vec<Option<usize>>)> {
        let mut theta = vec![None; self.h.n0()];
        for p in 0..self.x.len() {
            if theta[self.s[p]].replace(self.r[p]).is_some() {
                return None;
            }
        }
        Some((self.source_set(), theta))
    }

    pub fn to_data(&self) -> PeqData {
        let xn = |i: usize| self.x.name(i).to_string();
        let mut left = Vec::new();
        for a in 0..self.g.n1() {
            for p in 0..self.x.len() {
                if let Some(q) = self.act_left(a, p) {
                    left.push([self.g.g1().name(a).to_string(), xn(p), xn(q)]);
                }
            }
        }
        let mut right = Vec::new();
        for p in 0..self.x.len() {
            for b in 0..self.h.n1() {
                if let Some(q) = self.act_right(p, b) {
                    right.push([xn(p), self.h.g1().name(b).to_string(), xn(q)]);
                }
            }
        }
        left.sort();
        right.sort();
        PeqData {
            left_groupoid: self.g.to_data(),
            right_groupoid: self.h.to_data(),
            space: self.x.to_data(),
            r: (0..self.x.len()).map(|p| (xn(p), self.g.g0().name(self.r[p]).to_string())).collect(),
            s: (0..self.x.len()).map(|p| (xn(p), self.h.g0().name(self.s[p]).to_string())).collect(),
            left,
            right,
        }
    }
}

fn first_bijectivity_witness(dom: &FinSpace, cod: &FinSpace, f: &[usize]) -> String {
    let mut seen: HashMap<usize, usize> = HashMap::new();
    for (k, &v) in f.iter().enumerate() {
        if let Some(&j) = seen.get(&v) {
            return format!("{} and {} both map to {}", dom.name(j), dom.name(k), cod.name(v));
        }
        seen.insert(v, k);
    }
    match (0..cod.len()).find(|v| !seen.contains_key(v)) {
        Some(v) => format!("{} is not hit", cod.name(v)),
        None => "size mismatch".into(),
    }
}

fn index_by_name(big: &FinSpace, small: &FinSpace) -> Vec<Option<usize>> {
    big.names().iter().map(|n| small.index_of(n)).collect()
}

/// JSON form of a partial equivalence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeqData {
    pub left_groupoid: GroupoidData,
    pub right_groupoid: GroupoidData,
    pub space: SpaceData,
    pub r: BTreeMap<String, String>,
    pub s: BTreeMap<String, String>,
    pub left: Vec<[String; 3]>,
    pub right: Vec<[String; 3]>,
}

impl PeqData {
    pub fn build(&self) -> Result<PartialEquivalence, PeqError> {
        let g = Arc::new(self.left_groupoid.build()?);
        let h = Arc::new(self.right_groupoid.build()?);
        let x = self.space.build()?;
        let get = |m: &BTreeMap<String, String>, cod: &FinSpace| -> Result<Vec<usize>, TopError> {
            x.names().iter().map(|p| cod.point(m.get(p).ok_or_else(|| TopError::Undefined(p.clone()))?)).collect()
        };
        let r = get(&self.r, g.g0())?;
        let s = get(&self.s, h.g0())?;
        let nx = x.len();
        let mut left = vec![None; g.n1() * nx];
        for [a, p, q] in &self.left {
            left[g.g1().point(a)? * nx + x.point(p)?] = Some(x.point(q)?);
        }
        let mut right = vec![None; nx * h.n1()];
        for [p, b, q] in &self.right {
            right[x.point(p)? * h.n1() + h.g1().point(b)?] = Some(x.point(q)?);
        }
        PartialEquivalence::new(g, h, x, r, s, left, right)
    }
}

// ---------------------------------------------------------------------------
// Basic constructions.

/// `G¹` with left and right multiplication.
pub fn identity_equivalence(g: &Arc<FinGroupoid>) -> PartialEquivalence {
    let n = g.n1();
    let mult = g.mult_table().to_vec();
    PartialEquivalence::new(g.clone(), g.clone(), g.g1().clone(), g.r().to_vec(), g.s().to_vec(), mult.clone(), mult)
        .expect("identity equivalence verifies")
        .with_len_check(n)
}

impl PartialEquivalence {
    fn with_len_check(self, n: usize) -> Self {
        debug_assert_eq!(self.len(), n);
        self
    }
}

/// `_U|X|_V = {x : r(x) ∈ U, s(x) ∈ V}`.
pub fn restrict_peq(x: &PartialEquivalence, u: &PointSet, v: &PointSet) -> Result<PartialEquivalence, PeqError> {
    let (g, h) = (x.left(), x.right());
    if !g.g0().is_open(u) || !g.is_invariant(u) {
        return Err(PeqError::NotInvariant(g.g0().fmt_set(u)));
    }
    if !h.g0().is_open(v) || !h.is_invariant(v) {
        return Err(PeqError::NotInvariant(h.g0().fmt_set(v)));
    }
    let keep = set_from(x.len(), (0..x.len()).filter(|&p| u.contains(x.r[p]) && v.contains(x.s[p])));
    sub_bibundle(x, &keep)
}

/// The sub-bibundle on an invariant subset of points.
pub fn sub_bibundle(x: &PartialEquivalence, keep: &PointSet) -> Result<PartialEquivalence, PeqError> {
    let (sub, inc) = x.space().subspace(keep);
    let pos: HashMap<usize, usize> = inc.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let m = inc.len();
    let (g, h) = (x.left(), x.right());
    let mut left = vec![None; g.n1() * m];
    for a in 0..g.n1() {
        for (k, &p) in inc.iter().enumerate() {
            if let Some(q) = x.act_left(a, p) {
                left[a * m + k] =
                    Some(*pos.get(&q).ok_or_else(|| PeqError::NotInvariant("left orbit leaves subset".into()))?);
            }
        }
    }
    let mut right = vec![None; m * h.n1()];
    for (k, &p) in inc.iter().enumerate() {
        for b in 0..h.n1() {
            if let Some(q) = x.act_right(p, b) {
                right[k * h.n1() + b] =
                    Some(*pos.get(&q).ok_or_else(|| PeqError::NotInvariant("right orbit leaves subset".into()))?);
            }
        }
    }
    let r = inc.iter().map(|&p| x.r[p]).collect();
    let s = inc.iter().map(|&p| x.s[p]).collect();
    PartialEquivalence::new(x.left_arc(), x.right_arc(), sub, r, s, left, right)
}

/// `G¹_U` as a partial equivalence from `G` to itself.
pub fn unit_restriction(g: &Arc<FinGroupoid>, u: &PointSet) -> Result<PartialEquivalence, PeqError> {
    restrict_peq(&identity_equivalence(g), u, u)
}

/// A composite `X ×_H Y` together with the quotient data.
#[derive(Debug, Clone)]
pub struct Composite {
    pub peq: PartialEquivalence,
    /// Composable pairs `(x,y)` with `s(x) = r(y)`.
    pub pairs: Vec<(usize, usize)>,
    /// Class of each pair.
    pub class_of: Vec<usize>,
    pair_pos: HashMap<(usize, usize), usize>,
}

impl Composite {
    /// The class `[x,y]`.
    pub fn class(&self, x: usize, y: usize) -> Option<usize> {
        self.pair_pos.get(&(x, y)).map(|&k| self.class_of[k])
    }
    /// Lexicographically least representative of each class.
    pub fn representative(&self, c: usize) -> (usize, usize) {
        let k = self.class_of.iter().position(|&v| v == c).unwrap();
        self.pairs[k]
    }
}

/// `X ×_H Y = X ×_{s,H⁰,r} Y / (x·h, y) ∼ (x, h·y)` with the quotient topology.
pub fn compose(x: &PartialEquivalence, y: &PartialEquivalence) -> Result<Composite, PeqError> {
    if x.right() != y.left() {
        return Err(PeqError::GroupoidMismatch);
    }
    let h = x.right();
    let (fp, pairs) = fiber_product(x.space(), x.s(), y.space(), y.r());
    let pair_pos: HashMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let mut uf = UnionFind::new(pairs.len());
    for p in 0..x.len() {
        for b in 0..h.n1() {
            let Some(pb) = x.act_right(p, b) else { continue };
            for q in 0..y.len() {
                if y.r[q] != h.s()[b] {
                    continue;
                }
                let bq = y.act_left(b, q).unwrap();
                uf.union(pair_pos[&(pb, q)], pair_pos[&(p, bq)]);
            }
        }
    }
    let (_, classes) = uf.classes();
    // order classes by their least representative by name
    let key = |k: usize| (x.space().name(pairs[k].0).to_string(), y.space().name(pairs[k].1).to_string());
    let mut reps: Vec<(usize, Vec<usize>)> =
        classes.into_iter().map(|members| (*members.iter().min_by_key(|&&k| key(k)).unwrap(), members)).collect();
    reps.sort_by_key(|(rep, _)| key(*rep));
    let mut class_of = vec![0; pairs.len()];
    for (c, (_, members)) in reps.iter().enumerate() {
        for &k in members {
            class_of[k] = c;
        }
    }
    let names: Vec<String> = reps.iter().map(|(rep, _)| fp.name(*rep).to_string()).collect();
    let q = fp.quotient(&class_of, names)?;
    let nq = q.len();
    let (g, k) = (x.left(), y.right());
    let rep_pairs: Vec<(usize, usize)> = reps.iter().map(|(rep, _)| pairs[*rep]).collect();
    let mut left = vec![None; g.n1() * nq];
    for a in 0..g.n1() {
        for (c, &(p, q2)) in rep_pairs.iter().enumerate() {
            if let Some(ap) = x.act_left(a, p) {
                left[a * nq + c] = Some(class_of[pair_pos[&(ap, q2)]]);
            }
        }
    }
    let mut right = vec![None; nq * k.n1()];
    for (c, &(p, q2)) in rep_pairs.iter().enumerate() {
        for b in 0..k.n1() {
            if let Some(qb) = y.act_right(q2, b) {
                right[c * k.n1() + b] = Some(class_of[pair_pos[&(p, qb)]]);
            }
        }
    }
    let r = rep_pairs.iter().map(|&(p, _)| x.r[p]).collect();
    let s = rep_pairs.iter().map(|&(_, q2)| y.s[q2]).collect();
    let peq = PartialEquivalence::new(x.left_arc(), y.right_arc(), q, r, s, left, right)?;
    Ok(Composite { peq, pairs, class_of, pair_pos })
}

/// `X*`: anchors exchanged, `h·x = x·h⁻¹`, `x·g = g⁻¹·x`.
pub fn dual(x: &PartialEquivalence) -> PartialEquivalence {
    let (g, h) = (x.left(), x.right());
    let nx = x.len();
    let mut left = vec![None; h.n1() * nx];
    for b in 0..h.n1() {
        for p in 0..nx {
            left[b * nx + p] = x.act_right(p, h.inverse(b));
        }
    }
    let mut right = vec![None; nx * g.n1()];
    for p in 0..nx {
        for a in 0..g.n1() {
            right[p * g.n1() + a] = x.act_left(g.inverse(a), p);
        }
    }
    PartialEquivalence::new(x.right_arc(), x.left_arc(), x.space().clone(), x.s.clone(), x.r.clone(), left, right)
        .expect("dual of a partial equivalence verifies")
}

// ---------------------------------------------------------------------------
// Bibundle maps.

/// A bibundle map between two partial equivalences with the same groupoids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibundleMap {
    pub assignment: Vec<usize>,
    pub is_isomorphism: bool,
    /// Isomorphism onto the sub-bibundle `_{r(X₁)}|X₂`.
    pub onto_restriction: bool,
}

/// Checks continuity, anchors, and equivariance of an assignment.
pub fn check_bibundle_map(
    x1: &PartialEquivalence,
    x2: &PartialEquivalence,
    f: &[usize],
) -> Result<BibundleMap, PeqError> {
    if x1.left() != x2.left() || x1.right() != x2.right() {
        return Err(PeqError::GroupoidMismatch);
    }
    if f.len() != x1.len() || f.iter().any(|&v| v >= x2.len()) {
        return Err(PeqError::NotIsomorphism("assignment has the wrong shape".into()));
    }
    let n = |p: usize| x1.space().name(p).to_string();
    for p in 0..x1.len() {
        if x1.r[p] != x2.r[f[p]] || x1.s[p] != x2.s[f[p]] {
            return Err(PeqError::NotIsomorphism(format!("anchors differ at {}", n(p))));
        }
        for a in 0..x1.left().n1() {
            if let Some(q) = x1.act_left(a, p) {
                if x2.act_left(a, f[p]) != Some(f[q]) {
                    return Err(PeqError::NotIsomorphism(format!("not left equivariant at {}", n(p))));
                }
            }
        }
        for b in 0..x1.right().n1() {
            if let Some(q) = x1.act_right(p, b) {
                if x2.act_right(f[p], b) != Some(f[q]) {
                    return Err(PeqError::NotIsomorphism(format!("not right equivariant at {}", n(p))));
                }
            }
        }
    }
    if let Some(p) = first_discontinuity(x1.space(), x2.space(), f) {
        return Err(PeqError::NotIsomorphism(format!("not continuous at {}", n(p))));
    }
    let is_isomorphism = is_homeomorphism(x1.space(), x2.space(), f);
    let rx1 = x1.range_set();
    let target = set_from(x2.len(), (0..x2.len()).filter(|&q| rx1.contains(x2.r[q])));
    let onto_restriction = is_embedding(x1.space(), x2.space(), f)
        && image(f, x2.len(), &x1.space().full_set()) == target
        && x2.space().is_open(&target);
    Ok(BibundleMap { assignment: f.to_vec(), is_isomorphism, onto_restriction })
}

/// All bibundle maps `X₁ → X₂`, by exhaustive search over orbit
/// representatives with propagation through both actions.
pub fn find_bibundle_maps(x1: &PartialEquivalence, x2: &PartialEquivalence) -> Vec<BibundleMap> {
    if x1.left() != x2.left() || x1.right() != x2.right() {
        return vec![];
    }
    let n = x1.len();
    let mut out = Vec::new();
    let mut f: Vec<Option<usize>> = vec![None; n];
    fn propagate(
        x1: &PartialEquivalence,
        x2: &PartialEquivalence,
        f: &mut [Option<usize>],
        p: usize,
        q: usize,
    ) -> bool {
        let mut stack = vec![(p, q)];
        while let Some((p, q)) = stack.pop() {
            match f[p] {
                Some(v) if v == q => continue,
                Some(_) => return false,
                None => {}
            }
            if x1.r[p] != x2.r[q] || x1.s[p] != x2.s[q] {
                return false;
            }
            f[p] = Some(q);
            for a in 0..x1.left().n1() {
                if let Some(p2) = x1.act_left(a, p) {
                    match x2.act_left(a, q) {
                        Some(q2) => stack.push((p2, q2)),
                        None => return false,
                    }
                }
            }
            for b in 0..x1.right().n1() {
                if let Some(p2) = x1.act_right(p, b) {
                    match x2.act_right(q, b) {
                        Some(q2) => stack.push((p2, q2)),
                        None => return false,
                    }
                }
            }
        }
        true
    }
    fn rec(x1: &PartialEquivalence, x2: &PartialEquivalence, f: &mut Vec<Option<usize>>, out: &mut Vec<BibundleMap>) {
        if out.len() >= crate::max_enum() {
            return;
        }
        let Some(p) = (0..f.len()).find(|&p| f[p].is_none()) else {
            let g: Vec<usize> = f.iter().map(|v| v.unwrap()).collect();
            if let Ok(m) = check_bibundle_map(x1, x2, &g) {
                out.push(m);
            }
            return;
        };
        for q in 0..x2.len() {
            if x1.r[p] != x2.r[q] || x1.s[p] != x2.s[q] {
                continue;
            }
            let saved = f.clone();
            if propagate(x1, x2, f, p, q) {
                rec(x1, x2, f, out);
            }
            *f = saved;
        }
    }
    rec(x1, x2, &mut f, &mut out);
    out.sort_by(|a, b| a.assignment.cmp(&b.assignment));
    out
}

/// Some bibundle isomorphism `X₁ ≅ X₂`, if one exists.
pub fn find_isomorphism(x1: &PartialEquivalence, x2: &PartialEquivalence) -> Option<BibundleMap> {
    if x1.len() != x2.len() {
        return None;
    }
    find_bibundle_maps(x1, x2).into_iter().find(|m| m.is_isomorphism)
}

pub fn is_isomorphic(x1: &PartialEquivalence, x2: &PartialEquivalence) -> bool {
    find_isomorphism(x1, x2).is_some()
}

/// The two canonical pairings of a partial equivalence with its dual.
#[derive(Debug, Clone)]
pub struct Pairings {
    /// `X ×_H X*` with its isomorphism onto `G¹_{r(X)}`.
    pub left_composite: Composite,
    pub left_target: PartialEquivalence,
    pub left_map: BibundleMap,
    /// `X* ×_G X` with its isomorphism onto `H¹_{s(X)}`.
    pub right_composite: Composite,
    pub right_target: PartialEquivalence,
    pub right_map: BibundleMap,
}

/// Canonical isomorphisms `[x₁,x₂] ↦ g` with `x₁ = g·x₂` and
/// `[x₁,x₂] ↦ h` with `x₂ = x₁·h`; both are verified, and the two ways of
/// reducing `[x₁,x₂,x₃]` to `X` are checked to agree.
pub fn pairing(x: &PartialEquivalence) -> Result<Pairings, PeqError> {
    let xd = dual(x);
    let lc = compose(x, &xd)?;
    let rc = compose(&xd, x)?;
    let gu = unit_restriction(&x.left_arc(), &x.range_set())?;
    let hv = unit_restriction(&x.right_arc(), &x.source_set())?;
    let lmap: Vec<usize> = (0..lc.peq.len())
        .map(|c| {
            let (p, q) = lc.representative(c);
            let a = x.left_pairing(p, q).expect("left pairing defined on composable classes");
            gu.space().index_of(x.left().g1().name(a)).expect("pairing lands in the restriction")
        })
        .collect();
    let rmap: Vec<usize> = (0..rc.peq.len())
        .map(|c| {
            let (p, q) = rc.representative(c);
            let b = x.right_pairing(p, q).expect("right pairing defined on composable classes");
            hv.space().index_of(x.right().g1().name(b)).expect("pairing lands in the restriction")
        })
        .collect();
    let left_map = check_bibundle_map(&lc.peq, &gu, &lmap)?;
    let right_map = check_bibundle_map(&rc.peq, &hv, &rmap)?;
    if !left_map.is_isomorphism || !right_map.is_isomorphism {
        return Err(PeqError::NotIsomorphism("pairing".into()));
    }
    // well-defined on classes, and [x1,x2]·x3 = x1·⟨x2,x3⟩
    for (k, &(p, q)) in lc.pairs.iter().enumerate() {
        let a = x.left().g1().name(x.left_pairing(p, q).unwrap());
        if gu.space().name(lmap[lc.class_of[k]]) != a {
            return Err(PeqError::NotIsomorphism("left pairing depends on the representative".into()));
        }
    }
    for p1 in 0..x.len() {
        for p2 in 0..x.len() {
            for p3 in 0..x.len() {
                if x.s[p1] != x.s[p2] || x.r[p2] != x.r[p3] {
                    continue;
                }
                let a = x.left_pairing(p1, p2).unwrap();
                let b = x.right_pairing(p2, p3).unwrap();
                if x.act_left(a, p3) != x.act_right(p1, b) {
                    return Err(PeqError::NotIsomorphism("pairings are not compatible".into()));
                }
            }
        }
    }
    Ok(Pairings { left_composite: lc, left_target: gu, left_map, right_composite: rc, right_target: hv, right_map })
}

/// Result of trivializing an idempotent partial equivalence.
#[derive(Debug, Clone)]
pub struct Trivialization {
    pub u: PointSet,
    /// `X → G¹`, landing in `G¹_U`.
    pub iso: Vec<usize>,
}

/// Given a bibundle isomorphism `μ: X ×_G X → X`, finds the unique
/// isomorphism `φ: X → G¹_U` with `φ(μ[a,b]) = φ(a)·φ(b)`.
pub fn idempotent_trivialize(
    x: &PartialEquivalence,
    comp: &Composite,
    mu: &[usize],
) -> Result<Trivialization, PeqError> {
    let g = x.left();
    if x.left() != x.right() {
        return Err(PeqError::GroupoidMismatch);
    }
    let (rx, sx) = (x.range_set(), x.source_set());
    if rx != sx {
        return Err(PeqError::NoSuchStructure("r(X) differs from s(X)".into()));
    }
    let m = check_bibundle_map(&comp.peq, x, mu)?;
    if !m.is_isomorphism {
        return Err(PeqError::NotIsomorphism("μ is not bijective and bicontinuous".into()));
    }
    let mul = |a: usize, b: usize| comp.class(a, b).map(|c| mu[c]);
    let mut iso = Vec::with_capacity(x.len());
    for a in 0..x.len() {
        let cands: Vec<usize> = (0..g.n1())
            .filter(|&arr| g.r()[arr] == x.r[a] && g.s()[arr] == x.s[a])
            .filter(|&arr| (0..x.len()).filter(|&b| x.r[b] == x.s[a]).all(|b| mul(a, b) == x.act_left(arr, b)))
            .collect();
        if cands.len() != 1 {
            return Err(PeqError::NotIsomorphism(format!("no unique arrow represents {}", x.space().name(a))));
        }
        iso.push(cands[0]);
    }
    // φ is a bibundle isomorphism onto G¹_U and the square commutes
    let gu = unit_restriction(&x.left_arc(), &rx)?;
    let local: Vec<usize> = iso.iter().map(|&a| gu.space().index_of(g.g1().name(a)).unwrap()).collect();
    let chk = check_bibundle_map(x, &gu, &local)?;
    if !chk.is_isomorphism {
        return Err(PeqError::NotIsomorphism("trivialization is not an isomorphism".into()));
    }
    for a in 0..x.len() {
        for b in 0..x.len() {
            if let Some(ab) = mul(a, b) {
                if g.mul(iso[a], iso[b]) != Some(iso[ab]) {
                    return Err(PeqError::NotIsomorphism("square does not commute".into()));
                }
                for c in 0..x.len() {
                    if let (Some(l), Some(bc)) = (mul(ab, c), mul(b, c)) {
                        if mul(a, bc) != Some(l) {
                            return Err(PeqError::NotIsomorphism("μ is not associative".into()));
                        }
                    }
                }
            }
        }
    }
    Ok(Trivialization { u: rx, iso })
}

/// A local centraliser `γ: U → G¹`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalCentraliser {
    pub u: PointSet,
    /// `γ(x)` for each object `x` (only meaningful on `U`).
    pub gamma: Vec<Option<usize>>,
    pub trivial: bool,
}

/// All local centralisers, over every invariant open subset.
pub fn local_centralisers(g: &FinGroupoid) -> (Vec<LocalCentraliser>, bool) {
    let mut out = Vec::new();
    for u in g.invariant_opens() {
        let pts: Vec<usize> = u.ones().collect();
        let mut gamma: Vec<Option<usize>> = vec![None; g.n0()];
        fn rec(
            g: &FinGroupoid,
            u: &PointSet,
            pts: &[usize],
            k: usize,
            gamma: &mut Vec<Option<usize>>,
            out: &mut Vec<LocalCentraliser>,
        ) {
            if k == pts.len() {
                let arrows = g.arrows_over(u);
                let central =
                    arrows.ones().all(|a| g.mul(gamma[g.r()[a]].unwrap(), a) == g.mul(a, gamma[g.s()[a]].unwrap()));
                let map: Vec<usize> = pts.iter().map(|&x| gamma[x].unwrap()).collect();
                let (sub, _) = g.g0().subspace(u);
                let continuous = crate::fintop::is_continuous(&sub, g.g1(), &map);
                if central && continuous {
                    let trivial = pts.iter().all(|&x| gamma[x] == Some(g.unit(x)));
                    out.push(LocalCentraliser { u: u.clone(), gamma: gamma.clone(), trivial });
                }
                return;
            }
            let x = pts[k];
            for a in g.hom(x, x) {
                gamma[x] = Some(a);
                rec(g, u, pts, k + 1, gamma, out);
            }
            gamma[x] = None;
        }
        rec(g, &u, &pts, 0, &mut gamma, &mut out);
    }
    let nontrivial = out.iter().any(|c| !c.trivial);
    (out, nontrivial)
}

// ---------------------------------------------------------------------------
// Partial equivalences from partial data.

/// `X_θ` for a partial homeomorphism `θ: D → θ(D)` between open subsets of
/// `Z`: the space `D` with `r = θ`, `s = inclusion`.
pub fn from_partial_homeo(
    z: &FinSpace,
    domain: &PointSet,
    theta: &[Option<usize>],
) -> Result<PartialEquivalence, PeqError> {
    let zg = Arc::new(FinGroupoid::space(z));
    from_partial_homeo_on(&zg, domain, theta)
}

pub fn from_partial_homeo_on(
    zg: &Arc<FinGroupoid>,
    domain: &PointSet,
    theta: &[Option<usize>],
) -> Result<PartialEquivalence, PeqError> {
    let z = zg.g0();
    if !z.is_open(domain) {
        return Err(PeqError::NotHomeomorphism(format!("domain {} not open", z.fmt_set(domain))));
    }
    let (d, inc) = z.subspace(domain);
    let th: Vec<usize> = inc
        .iter()
        .map(|&p| {
            theta
                .get(p)
                .copied()
                .flatten()
                .ok_or_else(|| PeqError::NotHomeomorphism("θ undefined on its domain".into()))
        })
        .collect::<Result<_, _>>()?;
    let img = image(&th, z.len(), &d.full_set());
    if !z.is_open(&img) {
        return Err(PeqError::NotHomeomorphism(format!("image {} not open", z.fmt_set(&img))));
    }
    let (dimg, inc_img) = z.subspace(&img);
    let pos: HashMap<usize, usize> = inc_img.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let th_local: Vec<usize> = th.iter().map(|p| pos[p]).collect();
    if !is_homeomorphism(&d, &dimg, &th_local) {
        return Err(PeqError::NotHomeomorphism("θ is not a homeomorphism onto its image".into()));
    }
    let n = d.len();
    let nz = z.len();
    let mut left = vec![None; nz * n];
    let mut right = vec![None; n * nz];
    for k in 0..n {
        left[th[k] * n + k] = Some(k);
        right[k * nz + inc[k]] = Some(k);
    }
    PartialEquivalence::new(zg.clone(), zg.clone(), d, th, inc, left, right)
}

/// Checks that `(f0, f1)` is an isomorphism of topological groupoids.
pub fn check_groupoid_iso(g: &FinGroupoid, h: &FinGroupoid, f0: &[usize], f1: &[usize]) -> Result<(), PeqError> {
    let bad = |m: &str| Err(PeqError::NotIsomorphism(m.into()));
    if f0.len() != g.n0() || f1.len() != g.n1() || f0.iter().any(|&v| v >= h.n0()) || f1.iter().any(|&v| v >= h.n1()) {
        return bad("functor has the wrong shape");
    }
    if !is_homeomorphism(g.g0(), h.g0(), f0) || !is_homeomorphism(g.g1(), h.g1(), f1) {
        return bad("functor is not a homeomorphism");
    }
    for a in 0..g.n1() {
        if h.r()[f1[a]] != f0[g.r()[a]] || h.s()[f1[a]] != f0[g.s()[a]] {
            return bad("functor does not preserve range and source");
        }
        for b in 0..g.n1() {
            if let Some(ab) = g.mul(a, b) {
                if h.mul(f1[a], f1[b]) != Some(f1[ab]) {
                    return bad("functor does not preserve products");
                }
            }
        }
    }
    Ok(())
}

/// `H_f = H¹` with left multiplication and right action `x·g = x·f(g)`,
/// a partial equivalence from `G` to `H` for an isomorphism `f: G → H`.
pub fn from_functor_iso(
    g: &Arc<FinGroupoid>,
    h: &Arc<FinGroupoid>,
    f0: &[usize],
    f1: &[usize],
) -> Result<PartialEquivalence, PeqError> {
    check_groupoid_iso(g, h, f0, f1)?;
    let mut f0inv = vec![0; f0.len()];
    for (x, &y) in f0.iter().enumerate() {
        f0inv[y] = x;
    }
    let n = h.n1();
    let left = h.mult_table().to_vec();
    let mut right = vec![None; n * g.n1()];
    for p in 0..n {
        for a in 0..g.n1() {
            right[p * g.n1() + a] = h.mul(p, f1[a]);
        }
    }
    let s = h.s().iter().map(|&y| f0inv[y]).collect();
    PartialEquivalence::new(h.clone(), g.clone(), h.g1().clone(), h.r().to_vec(), s, left, right)
}

/// Composite of two `G`-`G` partial equivalences expressed in the form
/// `Y ×_G X ×_G Y*` etc. is left to callers; this helper composes a list
/// left to right.
pub fn compose_all(parts: &[&PartialEquivalence]) -> Result<PartialEquivalence, PeqError> {
    let mut acc = parts.first().ok_or_else(|| PeqError::Malformed("empty composite".into()))?.to_owned().clone();
    for p in &parts[1..] {
        acc = compose(&acc, p)?.peq;
    }
    Ok(acc)
}

/// Partial equivalences from `G` to itself with at most `max_points`
/// points, up to isomorphism, among those whose topology is induced from
/// `G¹ ×_{s,G⁰,ψ} V` for an invariant open `V`, a map `ψ: V → G⁰` and a
/// homomorphism `c: G_V → G` along `ψ`.  This covers every partial
/// equivalence of a space and of a groupoid with discrete arrow space.
pub fn enumerate_peqs(g: &Arc<FinGroupoid>, max_points: usize) -> Vec<PartialEquivalence> {
    let mut found: Vec<PartialEquivalence> = Vec::new();
    for v in g.invariant_opens() {
        let vpts: Vec<usize> = v.ones().collect();
        let mut psi = vec![0usize; vpts.len()];
        loop {
            let size: usize = psi.iter().map(|&o| (0..g.n1()).filter(|&a| g.s()[a] == o).count()).sum();
            if size <= max_points {
                enumerate_cocycles(g, &v, &vpts, &psi, &mut found);
            }
            // next ψ
            let mut k = 0;
            while k < psi.len() {
                psi[k] += 1;
                if psi[k] < g.n0() {
                    break;
                }
                psi[k] = 0;
                k += 1;
            }
            if k == psi.len() || found.len() >= crate::max_enum() {
                break;
            }
        }
    }
    found
}

fn enumerate_cocycles(
    g: &Arc<FinGroupoid>,
    v: &PointSet,
    vpts: &[usize],
    psi: &[usize],
    found: &mut Vec<PartialEquivalence>,
) {
    let psi_of = |x: usize| psi[vpts.iter().position(|&p| p == x).unwrap()];
    let arrows: Vec<usize> = g.arrows_over(v).ones().collect();
    let mut c: Vec<Option<usize>> = vec![None; g.n1()];
    fn rec(
        g: &Arc<FinGroupoid>,
        arrows: &[usize],
        k: usize,
        c: &mut Vec<Option<usize>>,
        psi_of: &dyn Fn(usize) -> usize,
        v: &PointSet,
        vpts: &[usize],
        psi: &[usize],
        found: &mut Vec<PartialEquivalence>,
    ) {
        if found.len() >= crate::max_enum() {
            return;
        }
        if k == arrows.len() {
            if let Some(p) = build_from_cocycle(g, vpts, psi, c) {
                if !found.iter().any(|q| is_isomorphic(q, &p)) {
                    found.push(p);
                }
            }
            return;
        }
        let b = arrows[k];
        let (x, y) = (g.r()[b], g.s()[b]);
        for a in g.hom(psi_of(x), psi_of(y)) {
            c[b] = Some(a);
            let ok = arrows[..=k].iter().all(|&b1| {
                arrows[..=k].iter().all(|&b2| match g.mul(b1, b2) {
                    Some(b12) => match c[b12] {
                        Some(c12) => g.mul(c[b1].unwrap(), c[b2].unwrap()) == Some(c12),
                        None => true,
                    },
                    None => true,
                })
            });
            if ok {
                rec(g, arrows, k + 1, c, psi_of, v, vpts, psi, found);
            }
        }
        c[b] = None;
        let _ = v;
    }
    rec(g, &arrows, 0, &mut c, &psi_of, v, vpts, psi, found);
}

fn build_from_cocycle(
    g: &Arc<FinGroupoid>,
    vpts: &[usize],
    psi: &[usize],
    c: &[Option<usize>],
) -> Option<PartialEquivalence> {
    // points (a, v) with s(a) = ψ(v), meaning a·x_v
    let mut pts: Vec<(usize, usize)> = Vec::new();
    for (i, &vv) in vpts.iter().enumerate() {
        for a in 0..g.n1() {
            if g.s()[a] == psi[i] {
                pts.push((a, vv));
            }
        }
    }
    let vspace_idx: Vec<usize> = vpts.to_vec();
    let (fp, fp_pairs) = {
        let (vs, inc) = g.g0().subspace(&set_from(g.n0(), vspace_idx.iter().copied()));
        let psi_local: Vec<usize> = (0..inc.len()).map(|k| psi[k]).collect();
        let (fp, pairs) = fiber_product(g.g1(), g.s(), &vs, &psi_local);
        let pairs: Vec<(usize, usize)> = pairs.into_iter().map(|(a, k)| (a, inc[k])).collect();
        (fp, pairs)
    };
    let pos: HashMap<(usize, usize), usize> = fp_pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let n = fp.len();
    let psi_of = |x: usize| psi[vpts.iter().position(|&p| p == x).unwrap()];
    let mut left = vec![None; g.n1() * n];
    for a2 in 0..g.n1() {
        for (k, &(a, vv)) in fp_pairs.iter().enumerate() {
            if let Some(b) = g.mul(a2, a) {
                left[a2 * n + k] = Some(pos[&(b, vv)]);
            }
        }
    }
    let mut right = vec![None; n * g.n1()];
    for (k, &(a, vv)) in fp_pairs.iter().enumerate() {
        for h in 0..g.n1() {
            if g.r()[h] != vv {
                continue;
            }
            let ch = c[h]?;
            let w = g.s()[h];
            debug_assert_eq!(g.s()[ch], psi_of(w));
            right[k * g.n1() + h] = Some(pos[&(g.mul(a, ch)?, w)]);
        }
    }
    let r = fp_pairs.iter().map(|&(a, _)| g.r()[a]).collect();
    let s = fp_pairs.iter().map(|&(_, vv)| vv).collect();
    let _ = pts;
    PartialEquivalence::new(g.clone(), g.clone(), fp, r, s, left, right).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn d2_swap() -> PartialEquivalence {
        let z = FinSpace::discrete(&["a", "b"]);
        from_partial_homeo(&z, &z.full_set(), &[Some(1), Some(0)]).unwrap()
    }

    #[test]
    fn identity_equivalences() {
        let pt = Arc::new(FinGroupoid::space(&FinSpace::discrete(&["*"])));
        assert_eq!(identity_equivalence(&pt).len(), 1);
        let gm = Arc::new(fixtures::gm());
        let id = identity_equivalence(&gm);
        assert_eq!(id.len(), 3);
        assert!(id.is_global());
        let z4 = Arc::new(FinGroupoid::cyclic(4));
        assert_eq!(identity_equivalence(&z4).len(), 4);
    }

    #[test]
    fn swap_composes_to_identity() {
        let sw = d2_swap();
        assert!(sw.is_global());
        let c = compose(&sw, &sw).unwrap();
        let id = identity_equivalence(&sw.left_arc());
        assert!(is_isomorphic(&c.peq, &id));
        assert!(is_isomorphic(&dual(&sw), &sw));
    }

    #[test]
    fn free_action_failure_is_reported() {
        // two points over the same fibres of the point groupoid: the left
        // shear map misses the off-diagonal pairs
        let pt = Arc::new(FinGroupoid::space(&FinSpace::discrete(&["*"])));
        let x = FinSpace::discrete(&["p", "q"]);
        let r = PartialEquivalence::new(
            pt.clone(),
            pt.clone(),
            x,
            vec![0, 0],
            vec![0, 0],
            vec![Some(0), Some(1)],
            vec![Some(0), Some(1)],
        );
        assert!(matches!(r, Err(PeqError::P3NotBijective(_))), "{r:?}");
    }

    #[test]
    fn l_g_is_global_equivalence_of_sigma() {
        let lg = fixtures::l_g();
        assert!(lg.is_global());
        let sig = lg.left().g0().clone();
        let o = sig.set_of(&["o"]).unwrap();
        let res = restrict_peq(&lg, &sig.full_set(), &o).unwrap();
        assert_eq!(res.space().names(), &["1o".to_string()]);
        let c = compose(&lg, &lg).unwrap();
        assert!(is_isomorphic(&c.peq, &identity_equivalence(&lg.left_arc())));
    }

    #[test]
    fn bibundle_map_counts() {
        let z2 = Arc::new(FinGroupoid::cyclic(2));
        let id = identity_equivalence(&z2);
        assert_eq!(find_bibundle_maps(&id, &id).len(), 2);
        let gm = Arc::new(fixtures::gm());
        let id = identity_equivalence(&gm);
        let maps = find_bibundle_maps(&id, &id);
        assert_eq!(maps.len(), 2);
        assert!(maps.iter().all(|m| m.is_isomorphism && m.onto_restriction));
        let empty = restrict_peq(&id, &gm.g0().empty_set(), &gm.g0().empty_set()).unwrap();
        assert_eq!(find_bibundle_maps(&empty, &id).len(), 1);
    }

    #[test]
    fn centralisers_of_gm() {
        let (all, nontrivial) = local_centralisers(&fixtures::gm());
        assert_eq!(all.len(), 4);
        assert!(nontrivial);
        let (p2, nt) = local_centralisers(&FinGroupoid::pair(&["a", "b"]));
        assert!(!nt);
        assert!(p2.iter().all(|c| c.trivial));
        let (z2, _) = local_centralisers(&FinGroupoid::cyclic(2));
        assert_eq!(z2.iter().filter(|c| c.u.count_ones(..) == 1).count(), 2);
    }

    #[test]
    fn idempotent_examples() {
        let gm = Arc::new(fixtures::gm());
        let id = identity_equivalence(&gm);
        let c = compose(&id, &id).unwrap();
        let mu: Vec<usize> = (0..c.peq.len())
            .map(|k| {
                let (a, b) = c.representative(k);
                gm.mul(a, b).unwrap()
            })
            .collect();
        let t = idempotent_trivialize(&id, &c, &mu).unwrap();
        assert_eq!(t.u, gm.g0().full_set());
        assert_eq!(t.iso, vec![0, 1, 2]);

        let sw = d2_swap();
        let c = compose(&sw, &sw).unwrap();
        for mu in [vec![0, 1], vec![1, 0], vec![0, 0]] {
            let e = idempotent_trivialize(&sw, &c, &mu).unwrap_err();
            assert!(matches!(e, PeqError::NotIsomorphism(_)));
        }
    }

    #[test]
    fn functor_iso_bitorsor() {
        let z4 = Arc::new(FinGroupoid::cyclic(4));
        let inv: Vec<usize> = (0..4).map(|k| (4 - k) % 4).collect();
        let hf = from_functor_iso(&z4, &z4, &[0], &inv).unwrap();
        assert_eq!(hf.len(), 4);
        assert!(hf.is_global());
        assert!(!is_isomorphic(&hf, &identity_equivalence(&z4)));
    }

    #[test]
    fn peq_enumeration_of_spaces_matches_partial_homeomorphisms() {
        // partial homeomorphisms of Σ: ∅, id_{o}, id_Σ
        let sig = Arc::new(FinGroupoid::space(&FinSpace::sierpinski()));
        assert_eq!(enumerate_peqs(&sig, 6).len(), 3);
        // D2: ∅, two partial identities on points, the two swaps of points
        // {a}→{b},{b}→{a}, identity, full swap
        let d2 = Arc::new(FinGroupoid::space(&FinSpace::discrete(&["a", "b"])));
        assert_eq!(enumerate_peqs(&d2, 6).len(), 7);
    }
}
