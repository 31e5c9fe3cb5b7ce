//! Inverse semigroup actions on finite groupoids by partial equivalences.
//!
//! An [`SAction`] is stored in simplified form: spaces `X_t` with anchors
//! into `G⁰` and multiplication tables `μ_{t,u}: X_t ×_{s,r} X_u → X_{tu}`.
//! The left and right `G`-actions on `X_t` are `μ_{1,t}` and `μ_{t,1}`.
//! Verification derives the inclusions `j_{u,t}` and involutions `J_t` and
//! checks their coherence.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bibundle::{
    check_bibundle_map, compose, dual, from_partial_homeo_on, idempotent_trivialize, PartialEquivalence, PeqError,
};
use crate::fintop::{
    self, fiber_product, first_discontinuity, image, is_continuous, is_homeomorphism, is_open_map, is_surjective,
    product, set_from, tagged_union, CMap, FinSpace, PointSet, SpaceData, TopError,
};
use crate::groupoid::{
    cover_map, find_structure_iso, FinGroupoid, GroupoidData, GroupoidError, Structure, StructureIso, UnionFind,
};
use crate::isg::{
    bisections, set_inverse, set_product, z_isomorphism_check, Adjoin, Bisections, InvSemigroup, IsgError,
    SemigroupData,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error(transparent)]
    Top(#[from] TopError),
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
    #[error(transparent)]
    Peq(#[from] PeqError),
    #[error(transparent)]
    Isg(#[from] IsgError),
    #[error("malformed action data: {0}")]
    Malformed(String),
    #[error("the semigroup has no unit")]
    NoUnit,
    #[error("value outside the target space: {0}")]
    TargetMismatch(String),
    #[error("unit fibre differs from the groupoid: {0}")]
    UnitFibre(String),
    #[error("S1 (anchors of products): {0}")]
    S1(String),
    #[error("S2 (anchors continuous and open): {0}")]
    S2(String),
    #[error("S3 (anchors of X_1 surjective): {0}")]
    S3(String),
    #[error("S4 (multiplication surjective): {0}")]
    S4(String),
    #[error("S5 (left shear homeomorphism): {0}")]
    S5(String),
    #[error("S6 (right shear homeomorphism): {0}")]
    S6(String),
    #[error("S7 (associativity): {0}")]
    S7(String),
    #[error("multiplication is not continuous: {0}")]
    MultNotContinuous(String),
    #[error("derived structure missing or not unique: {0}")]
    NonUniqueOrMissing(String),
    #[error("not a partial homeomorphism between open subsets: {0}")]
    NotPartialHomeo(String),
    #[error("not a homomorphism into partial homeomorphisms at ({0},{1}) on {2}")]
    NotHomomorphism(String, String, String),
    #[error("Gr1 fails: L_{0}·L_{1} ≠ L_{0}{1}")]
    Gr1(String, String),
    #[error("Gr2 fails: L_{0}⁻¹ ≠ L_{0}*")]
    Gr2(String),
    #[error("Gr4 fails: L_{0} ∩ L_{1} is not the union of the lower slices")]
    Gr4(String, String),
    #[error("Gr6 fails: arrow {0} lies in no slice")]
    Gr6(String),
    #[error("slice L_{0} is not open")]
    SliceNotOpen(String),
    #[error("cocycle is not multiplicative at ({0},{1})")]
    NotMultiplicative(String, String),
    #[error("map is not continuous: {0}")]
    NotContinuous(String),
    #[error("map is not equivariant: {0}")]
    NotEquivariant(String),
    #[error("not an inverse semigroup model: {0}")]
    NotAModel(String),
    #[error("equivalence is not global")]
    NotGlobalEquivalence,
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
}

/// One space `X_t` with its anchors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XSpace {
    pub space: FinSpace,
    pub r: Vec<usize>,
    pub s: Vec<usize>,
}

/// A verified simplified action of an inverse semigroup with unit.
#[derive(Debug, Clone)]
pub struct SAction {
    s: InvSemigroup,
    g: Arc<FinGroupoid>,
    x: Vec<PartialEquivalence>,
    mu: Vec<Vec<Option<usize>>>,
    phi: Vec<Option<Vec<usize>>>,
    j: BTreeMap<(usize, usize), Vec<usize>>,
    jstar: Vec<Vec<usize>>,
}

fn positions(inc: &[usize]) -> HashMap<usize, usize> {
    inc.iter().enumerate().map(|(k, &p)| (p, k)).collect()
}

impl SAction {
    /// Verifies S1–S7, re-verifies every `X_t` as a partial equivalence,
    /// and derives `j` and `J` (`verify_action`).
    pub fn new(
        s: InvSemigroup,
        g: Arc<FinGroupoid>,
        xs: Vec<XSpace>,
        mu: Vec<Vec<Option<usize>>>,
    ) -> Result<SAction, ActionError> {
        let n = s.len();
        if xs.len() != n || mu.len() != n * n {
            return Err(ActionError::Malformed("one space per element and one table per pair required".into()));
        }
        let one = s.unit().ok_or(ActionError::NoUnit)?;
        let sz: Vec<usize> = xs.iter().map(|x| x.space.len()).collect();
        for (t, x) in xs.iter().enumerate() {
            if x.r.len() != sz[t] || x.s.len() != sz[t] || x.r.iter().chain(&x.s).any(|&v| v >= g.n0()) {
                return Err(ActionError::Malformed(format!("anchors of X_{}", s.name(t))));
            }
        }
        let tn = |t: usize| s.name(t).to_string();
        let xn = |t: usize, p: usize| xs[t].space.name(p).to_string();
        for t in 0..n {
            for u in 0..n {
                let tab = &mu[t * n + u];
                if tab.len() != sz[t] * sz[u] {
                    return Err(ActionError::Malformed(format!("μ_{{{},{}}} has the wrong size", tn(t), tn(u))));
                }
                let tu = s.mul(t, u);
                for (k, v) in tab.iter().enumerate() {
                    if let Some(v) = *v {
                        if v >= sz[tu] {
                            return Err(ActionError::TargetMismatch(format!(
                                "μ_{{{},{}}}({},{}) is not in X_{}",
                                tn(t),
                                tn(u),
                                xn(t, k / sz[u].max(1)),
                                xn(u, k % sz[u].max(1)),
                                tn(tu)
                            )));
                        }
                    }
                }
            }
        }
        let m = |t: usize, u: usize, x: usize, y: usize| mu[t * n + u][x * sz[u] + y];
        // unit fibre
        let x1 = &xs[one];
        if x1.space != *g.g1() || x1.r != g.r() || x1.s != g.s() {
            return Err(ActionError::UnitFibre("X_1 differs from G¹".into()));
        }
        for a in 0..g.n1() {
            for b in 0..g.n1() {
                if m(one, one, a, b) != g.mul(a, b) {
                    return Err(ActionError::UnitFibre("μ_{1,1} differs from the groupoid multiplication".into()));
                }
            }
        }
        // S1
        for t in 0..n {
            for u in 0..n {
                let tu = s.mul(t, u);
                for x in 0..sz[t] {
                    for y in 0..sz[u] {
                        let comp = xs[t].s[x] == xs[u].r[y];
                        match (comp, m(t, u, x, y)) {
                            (true, Some(v)) => {
                                if xs[tu].s[v] != xs[u].s[y] || xs[tu].r[v] != xs[t].r[x] {
                                    return Err(ActionError::S1(format!(
                                        "anchors of μ_{{{},{}}}({},{})",
                                        tn(t),
                                        tn(u),
                                        xn(t, x),
                                        xn(u, y)
                                    )));
                                }
                            }
                            (false, None) => {}
                            _ => {
                                return Err(ActionError::S1(format!(
                                    "μ_{{{},{}}} domain at ({},{})",
                                    tn(t),
                                    tn(u),
                                    xn(t, x),
                                    xn(u, y)
                                )))
                            }
                        }
                    }
                }
            }
        }
        // S2
        for t in 0..n {
            for (anchor, lbl) in [(&xs[t].r, "r"), (&xs[t].s, "s")] {
                if let Some(p) = first_discontinuity(&xs[t].space, g.g0(), anchor) {
                    return Err(ActionError::S2(format!("{lbl} on X_{} not continuous at {}", tn(t), xn(t, p))));
                }
                if !is_open_map(&xs[t].space, g.g0(), anchor) {
                    return Err(ActionError::S2(format!("{lbl} on X_{} not open", tn(t))));
                }
            }
        }
        // S3
        if !is_surjective(g.n0(), &x1.r) || !is_surjective(g.n0(), &x1.s) {
            return Err(ActionError::S3("r or s on X_1 misses an object".into()));
        }
        // S4 and continuity
        for t in 0..n {
            for u in 0..n {
                let tu = s.mul(t, u);
                let (fp, pairs) = fiber_product(&xs[t].space, &xs[t].s, &xs[u].space, &xs[u].r);
                let f: Vec<usize> = pairs.iter().map(|&(x, y)| m(t, u, x, y).unwrap()).collect();
                if !is_surjective(sz[tu], &f) {
                    let miss = (0..sz[tu]).find(|v| !f.contains(v)).unwrap();
                    return Err(ActionError::S4(format!("μ_{{{},{}}} misses {}", tn(t), tn(u), xn(tu, miss))));
                }
                if let Some(k) = first_discontinuity(&fp, &xs[tu].space, &f) {
                    return Err(ActionError::MultNotContinuous(format!("μ_{{{},{}}} at {}", tn(t), tn(u), fp.name(k))));
                }
            }
        }
        // S5 and S6
        for u in 0..n {
            let (dom, pairs) = fiber_product(&x1.space, &x1.s, &xs[u].space, &xs[u].r);
            let (cod, cpairs) = fiber_product(&xs[u].space, &xs[u].s, &xs[u].space, &xs[u].s);
            let cpos = positions_pairs(&cpairs);
            let f: Vec<usize> = pairs.iter().map(|&(a, y)| cpos[&(y, m(one, u, a, y).unwrap())]).collect();
            if dom.len() != cod.len() || !is_homeomorphism(&dom, &cod, &f) {
                return Err(ActionError::S5(format!("(g,y) ↦ (y,g·y) on X_{}", tn(u))));
            }
        }
        for t in 0..n {
            let (dom, pairs) = fiber_product(&xs[t].space, &xs[t].s, &x1.space, &x1.r);
            let (cod, cpairs) = fiber_product(&xs[t].space, &xs[t].r, &xs[t].space, &xs[t].r);
            let cpos = positions_pairs(&cpairs);
            let f: Vec<usize> = pairs.iter().map(|&(x, a)| cpos[&(x, m(t, one, x, a).unwrap())]).collect();
            if dom.len() != cod.len() || !is_homeomorphism(&dom, &cod, &f) {
                return Err(ActionError::S6(format!("(x,g) ↦ (x,x·g) on X_{}", tn(t))));
            }
        }
        // S7
        for t in 0..n {
            for u in 0..n {
                let tu = s.mul(t, u);
                for v in 0..n {
                    let uv = s.mul(u, v);
                    for x in 0..sz[t] {
                        for y in 0..sz[u] {
                            let Some(xy) = m(t, u, x, y) else { continue };
                            for z in 0..sz[v] {
                                let Some(yz) = m(u, v, y, z) else { continue };
                                if m(tu, v, xy, z) != m(t, uv, x, yz) {
                                    return Err(ActionError::S7(format!(
                                        "({}·{})·{} ≠ {}·({}·{}) for ({},{},{})",
                                        xn(t, x),
                                        xn(u, y),
                                        xn(v, z),
                                        xn(t, x),
                                        xn(u, y),
                                        xn(v, z),
                                        tn(t),
                                        tn(u),
                                        tn(v)
                                    )));
                                }
                            }
                        }
                    }
                }
            }
        }
        // partial equivalences
        let mut peqs = Vec::with_capacity(n);
        for t in 0..n {
            let mut left = vec![None; g.n1() * sz[t]];
            let mut right = vec![None; sz[t] * g.n1()];
            for a in 0..g.n1() {
                for x in 0..sz[t] {
                    left[a * sz[t] + x] = m(one, t, a, x);
                    right[x * g.n1() + a] = m(t, one, x, a);
                }
            }
            let p = PartialEquivalence::new(
                g.clone(),
                g.clone(),
                xs[t].space.clone(),
                xs[t].r.clone(),
                xs[t].s.clone(),
                left,
                right,
            )?;
            peqs.push(p);
        }
        let mut a = SAction { s, g, x: peqs, mu, phi: vec![], j: BTreeMap::new(), jstar: vec![] };
        a.check_domains()?;
        a.derive()?;
        if let Some(f) = a.coherence().failures.first() {
            return Err(ActionError::NonUniqueOrMissing(f.clone()));
        }
        Ok(a)
    }

    pub fn semigroup(&self) -> &InvSemigroup {
        &self.s
    }
    pub fn groupoid(&self) -> &FinGroupoid {
        &self.g
    }
    pub fn groupoid_arc(&self) -> Arc<FinGroupoid> {
        self.g.clone()
    }
    /// `X_t` as a partial equivalence of `G`.
    pub fn x(&self, t: usize) -> &PartialEquivalence {
        &self.x[t]
    }
    pub fn unit(&self) -> usize {
        self.s.unit().unwrap()
    }
    /// Whether `X₀ = ∅` for a zero element (vacuous without one).
    pub fn zero_empty(&self) -> bool {
        self.s.zero().is_none_or(|z| self.x[z].is_empty())
    }
    pub fn mu(&self, t: usize, u: usize, x: usize, y: usize) -> Option<usize> {
        self.mu[t * self.s.len() + u][x * self.x[u].len() + y]
    }
    /// `φ_e: X_e → G¹` for idempotent `e`.
    pub fn trivialization(&self, e: usize) -> Option<&[usize]> {
        self.phi[e].as_deref()
    }
    /// `j_{u,t}: X_t → X_u` for `t ≤ u`.
    pub fn j(&self, u: usize, t: usize) -> Option<&[usize]> {
        self.j.get(&(u, t)).map(|v| v.as_slice())
    }
    /// `x ↦ x*` from `X_t` to `X_{t*}`.
    pub fn star(&self, t: usize) -> &[usize] {
        &self.jstar[t]
    }

    fn check_domains(&self) -> Result<(), ActionError> {
        for t in 0..self.s.len() {
            let (ts, tt) = (self.s.star(t), self.s.rng(t));
            let st = self.s.src(t);
            let (r, sr) = (|u: usize| self.x[u].range_set(), |u: usize| self.x[u].source_set());
            if r(t) != r(tt) || r(t) != sr(ts) || sr(t) != sr(st) || sr(t) != r(ts) {
                return Err(ActionError::CrossCheck(format!("domains of X_{}", self.s.name(t))));
            }
        }
        Ok(())
    }

    fn derive(&mut self) -> Result<(), ActionError> {
        let n = self.s.len();
        let mut phi = vec![None; n];
        for e in self.s.idempotents() {
            let comp = compose(&self.x[e], &self.x[e])?;
            let mu_class: Vec<usize> = (0..comp.peq.len())
                .map(|c| {
                    let (a, b) = comp.representative(c);
                    self.mu(e, e, a, b).unwrap()
                })
                .collect();
            let tr = idempotent_trivialize(&self.x[e], &comp, &mu_class).map_err(|err| {
                ActionError::NonUniqueOrMissing(format!("trivialization of X_{}: {err}", self.s.name(e)))
            })?;
            phi[e] = Some(tr.iso);
        }
        self.phi = phi;
        let mut j = BTreeMap::new();
        for u in 0..n {
            for t in (0..n).filter(|&t| self.s.leq(t, u)) {
                j.insert((u, t), self.construct_j(u, t)?);
            }
        }
        self.j = j;
        let mut jstar = Vec::with_capacity(n);
        for t in 0..n {
            jstar.push(self.construct_star(t)?);
        }
        self.jstar = jstar;
        Ok(())
    }

    fn construct_j(&self, u: usize, t: usize) -> Result<Vec<usize>, ActionError> {
        let (e, f) = (self.s.rng(t), self.s.src(t));
        let (phe, phf) = (self.phi[e].as_ref().unwrap(), self.phi[f].as_ref().unwrap());
        let name = format!("j_{{{},{}}}", self.s.name(u), self.s.name(t));
        let mut out = Vec::with_capacity(self.x[t].len());
        for x in 0..self.x[t].len() {
            let mut vals = Vec::new();
            for a in 0..self.x[e].len() {
                for y in 0..self.x[u].len() {
                    if self.mu(e, u, a, y) == Some(x) {
                        vals.push(self.x[u].act_left(phe[a], y));
                    }
                }
            }
            for y in 0..self.x[u].len() {
                for b in 0..self.x[f].len() {
                    if self.mu(u, f, y, b) == Some(x) {
                        vals.push(self.x[u].act_right(y, phf[b]));
                    }
                }
            }
            match vals.first() {
                Some(Some(v)) if vals.iter().all(|w| *w == Some(*v)) => out.push(*v),
                _ => return Err(ActionError::NonUniqueOrMissing(format!("{name} at {}", self.x[t].space().name(x)))),
            }
        }
        let m = check_bibundle_map(&self.x[t], &self.x[u], &out)?;
        if !fintop::is_embedding(self.x[t].space(), self.x[u].space(), &out)
            || !self.x[u].space().is_open(&image(&out, self.x[u].len(), &self.x[t].space().full_set()))
        {
            return Err(ActionError::NonUniqueOrMissing(format!("{name} is not an open embedding")));
        }
        if t == u && out.iter().enumerate().any(|(k, &v)| k != v) {
            return Err(ActionError::NonUniqueOrMissing(format!("{name} is not the identity")));
        }
        let _ = m;
        Ok(out)
    }

    fn construct_star(&self, t: usize) -> Result<Vec<usize>, ActionError> {
        let (ts, e) = (self.s.star(t), self.s.rng(t));
        let xt = &self.x[t];
        let mut out = Vec::with_capacity(xt.len());
        for x in 0..xt.len() {
            let cands: Vec<usize> = (0..self.x[ts].len())
                .filter(|&y| self.x[ts].r()[y] == xt.s()[x] && self.x[ts].s()[y] == xt.r()[x])
                .filter(|&y| self.mu(t, ts, x, y).and_then(|xy| self.mu(e, t, xy, x)) == Some(x))
                .collect();
            if cands.len() != 1 {
                return Err(ActionError::NonUniqueOrMissing(format!(
                    "x·x*·x = x has {} solutions for x = {} in X_{}",
                    cands.len(),
                    xt.space().name(x),
                    self.s.name(t)
                )));
            }
            out.push(cands[0]);
        }
        let m = check_bibundle_map(&dual(xt), &self.x[ts], &out)?;
        if !m.is_isomorphism {
            return Err(ActionError::NonUniqueOrMissing(format!("J_{} is not an isomorphism", self.s.name(t))));
        }
        Ok(out)
    }

    /// Recomputes the involution and inclusion identities pointwise.
    pub fn coherence(&self) -> CoherenceReport {
        let s = &self.s;
        let n = s.len();
        let mut rep = CoherenceReport::default();
        let mut check = |ok: bool, msg: &dyn Fn() -> String| {
            rep.checks += 1;
            if !ok {
                rep.failures.push(msg());
            }
        };
        let g = &self.g;
        for t in 0..n {
            let (ts, e, f) = (s.star(t), s.rng(t), s.src(t));
            let xt = &self.x[t];
            let st = &self.jstar[t];
            let (phe, phf) = (self.phi[e].as_ref().unwrap(), self.phi[f].as_ref().unwrap());
            for x in 0..xt.len() {
                let xs = st[x];
                // x x* x = x
                check(self.mu(t, ts, x, xs).and_then(|a| self.mu(e, t, a, x)) == Some(x), &|| {
                    format!("x·x*·x ≠ x at {} in X_{}", xt.space().name(x), s.name(t))
                });
                // x x* = 1_{r(x)}, x* x = 1_{s(x)}
                check(self.mu(t, ts, x, xs).map(|a| phe[a]) == Some(g.unit(xt.r()[x])), &|| {
                    format!("x·x* ≠ 1 at {}", xt.space().name(x))
                });
                check(self.mu(ts, t, xs, x).map(|a| phf[a]) == Some(g.unit(xt.s()[x])), &|| {
                    format!("x*·x ≠ 1 at {}", xt.space().name(x))
                });
                // x** = x
                check(self.jstar[ts][xs] == x, &|| format!("x** ≠ x at {}", xt.space().name(x)));
            }
            // characterise_Jt_2: both squares
            for x1 in 0..xt.len() {
                for x2 in 0..xt.len() {
                    if xt.s()[x1] == xt.s()[x2] {
                        check(self.mu(t, ts, x1, st[x2]).map(|a| phe[a]) == xt.left_pairing(x1, x2), &|| {
                            format!("left square of J_{} at ({},{})", s.name(t), x1, x2)
                        });
                    }
                    if xt.r()[x1] == xt.r()[x2] {
                        check(self.mu(ts, t, st[x1], x2).map(|a| phf[a]) == xt.right_pairing(x1, x2), &|| {
                            format!("right square of J_{} at ({},{})", s.name(t), x1, x2)
                        });
                    }
                }
            }
            // (xy)* = y* x*
            for u in 0..n {
                let tu = s.mul(t, u);
                for x in 0..xt.len() {
                    for y in 0..self.x[u].len() {
                        if let Some(xy) = self.mu(t, u, x, y) {
                            check(Some(self.jstar[tu][xy]) == self.mu(s.star(u), ts, self.jstar[u][y], st[x]), &|| {
                                format!("(xy)* ≠ y*x* for X_{} × X_{}", s.name(t), s.name(u))
                            });
                        }
                    }
                }
            }
        }
        for (&(u, t), jut) in &self.j {
            // j_{u*,t*}(x*) = j_{u,t}(x)*
            let jst = &self.j[&(s.star(u), s.star(t))];
            for x in 0..self.x[t].len() {
                check(jst[self.jstar[t][x]] == self.jstar[u][jut[x]], &|| {
                    format!("j and * do not commute for ({},{})", s.name(u), s.name(t))
                });
            }
            // j_{v,u} ∘ j_{u,t} = j_{v,t}
            for v in (0..n).filter(|&v| s.leq(u, v)) {
                let (jvu, jvt) = (&self.j[&(v, u)], &self.j[&(v, t)]);
                for x in 0..self.x[t].len() {
                    check(jvu[jut[x]] == jvt[x], &|| {
                        format!("j_{{{0},{1}}}∘j_{{{1},{2}}} ≠ j_{{{0},{2}}}", s.name(v), s.name(u), s.name(t))
                    });
                }
            }
        }
        // compatibility of j with multiplication
        for (&(u1, t1), j1) in &self.j {
            for (&(u2, t2), j2) in &self.j {
                let j12 = &self.j[&(s.mul(u1, u2), s.mul(t1, t2))];
                for x in 0..self.x[t1].len() {
                    for y in 0..self.x[t2].len() {
                        if let Some(xy) = self.mu(t1, t2, x, y) {
                            check(self.mu(u1, u2, j1[x], j2[y]) == Some(j12[xy]), &|| {
                                format!(
                                    "inclusions do not respect multiplication for ({},{}),({},{})",
                                    s.name(t1),
                                    s.name(u1),
                                    s.name(t2),
                                    s.name(u2)
                                )
                            });
                        }
                    }
                }
            }
        }
        rep
    }

    /// The raw data: spaces and multiplication tables.
    pub fn spaces(&self) -> Vec<XSpace> {
        self.x.iter().map(|p| XSpace { space: p.space().clone(), r: p.r().to_vec(), s: p.s().to_vec() }).collect()
    }

    pub fn tables(&self) -> &[Vec<Option<usize>>] {
        &self.mu
    }

    pub fn to_data(&self) -> ActionData {
        let n = self.s.len();
        let g0 = self.g.g0();
        let spaces = (0..n)
            .map(|t| {
                let p = &self.x[t];
                let names = |m: &[usize]| {
                    (0..p.len()).map(|k| (p.space().name(k).to_string(), g0.name(m[k]).to_string())).collect()
                };
                (self.s.name(t).to_string(), XData { space: p.space().to_data(), r: names(p.r()), s: names(p.s()) })
            })
            .collect();
        let mut mu = Vec::new();
        for t in 0..n {
            for u in 0..n {
                let tu = self.s.mul(t, u);
                for x in 0..self.x[t].len() {
                    for y in 0..self.x[u].len() {
                        if let Some(v) = self.mu(t, u, x, y) {
                            mu.push([
                                self.s.name(t).to_string(),
                                self.s.name(u).to_string(),
                                self.x[t].space().name(x).to_string(),
                                self.x[u].space().name(y).to_string(),
                                self.x[tu].space().name(v).to_string(),
                            ]);
                        }
                    }
                }
            }
        }
        ActionData { semigroup: self.s.to_data(), groupoid: self.g.to_data(), spaces, mu }
    }

    /// Elements `⊔X_t` as a groupoid-shaped structure coloured by `t`.
    pub fn structure(&self) -> Structure {
        let n = self.s.len();
        let parts: Vec<&FinSpace> = self.x.iter().map(|p| p.space()).collect();
        let (el, origin) = tagged_union(&parts, |t, nm| format!("{nm}@{}", self.s.name(t)));
        let off = offsets(&parts);
        let m = el.len();
        let mut mult = vec![None; m * m];
        for (a, &(t, x)) in origin.iter().enumerate() {
            for (b, &(u, y)) in origin.iter().enumerate() {
                mult[a * m + b] = self.mu(t, u, x, y).map(|v| off[self.s.mul(t, u)] + v);
            }
        }
        let r = origin.iter().map(|&(t, x)| self.x[t].r()[x]).collect();
        let s = origin.iter().map(|&(t, x)| self.x[t].s()[x]).collect();
        let colour = origin.iter().map(|&(t, _)| vec![t as u32]).collect();
        let _ = n;
        Structure { obj: self.g.g0().clone(), el, r, s, mult, colour }
    }
}

fn positions_pairs(pairs: &[(usize, usize)]) -> HashMap<(usize, usize), usize> {
    pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect()
}

fn offsets(parts: &[&FinSpace]) -> Vec<usize> {
    let mut off = Vec::with_capacity(parts.len());
    let mut acc = 0;
    for p in parts {
        off.push(acc);
        acc += p.len();
    }
    off
}

/// Outcome of the pointwise coherence suite.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub checks: usize,
    pub failures: Vec<String>,
}

/// An isomorphism of actions of the same semigroup: homeomorphisms
/// `X_t → Y_t` compatible with anchors and multiplication.
pub fn find_action_isomorphism(a: &SAction, b: &SAction) -> Option<StructureIso> {
    if a.s != b.s {
        return None;
    }
    find_structure_iso(&a.structure(), &b.structure())
}

/// JSON form of one `X_t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XData {
    pub space: SpaceData,
    pub r: BTreeMap<String, String>,
    pub s: BTreeMap<String, String>,
}

/// JSON form of an action: `mu` rows are `[t, u, x, y, x·y]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionData {
    pub semigroup: SemigroupData,
    pub groupoid: GroupoidData,
    pub spaces: BTreeMap<String, XData>,
    pub mu: Vec<[String; 5]>,
}

impl ActionData {
    pub fn build(&self) -> Result<SAction, ActionError> {
        let s = self.semigroup.build()?;
        let g = Arc::new(self.groupoid.build()?);
        let n = s.len();
        let mut xs = Vec::with_capacity(n);
        for t in 0..n {
            let d = self
                .spaces
                .get(s.name(t))
                .ok_or_else(|| ActionError::Malformed(format!("no space for {}", s.name(t))))?;
            let space = d.space.build()?;
            let get = |m: &BTreeMap<String, String>| -> Result<Vec<usize>, TopError> {
                space
                    .names()
                    .iter()
                    .map(|p| g.g0().point(m.get(p).ok_or_else(|| TopError::Undefined(p.clone()))?))
                    .collect()
            };
            let (r, sa) = (get(&d.r)?, get(&d.s)?);
            xs.push(XSpace { space, r, s: sa });
        }
        let mut mu: Vec<Vec<Option<usize>>> =
            (0..n * n).map(|k| vec![None; xs[k / n].space.len() * xs[k % n].space.len()]).collect();
        for [t, u, x, y, v] in &self.mu {
            let ti = s.index_of(t).ok_or_else(|| ActionError::Malformed(format!("unknown element {t}")))?;
            let ui = s.index_of(u).ok_or_else(|| ActionError::Malformed(format!("unknown element {u}")))?;
            let tu = s.mul(ti, ui);
            let xi = xs[ti].space.point(x)?;
            let yi = xs[ui].space.point(y)?;
            let vi = xs[tu].space.index_of(v).ok_or_else(|| {
                ActionError::TargetMismatch(format!("μ_{{{t},{u}}}({x},{y}) = {v} is not in X_{}", s.name(tu)))
            })?;
            mu[ti * n + ui][xi * xs[ui].space.len() + yi] = Some(vi);
        }
        SAction::new(s, g, xs, mu)
    }
}

// ---------------------------------------------------------------------------
// Gradings.

/// A groupoid with a family of open slices indexed by an inverse semigroup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SGradedGroupoid {
    s: InvSemigroup,
    l: Arc<FinGroupoid>,
    slices: Vec<PointSet>,
    saturated: bool,
}

impl SGradedGroupoid {
    /// Verifies Gr1 (with equality), Gr2, Gr4, Gr6 and openness.
    pub fn new(s: InvSemigroup, l: Arc<FinGroupoid>, slices: Vec<PointSet>) -> Result<SGradedGroupoid, ActionError> {
        Self::verify(&s, &l, &slices, true)?;
        Ok(SGradedGroupoid { s, l, slices, saturated: true })
    }

    /// As [`SGradedGroupoid::new`] but with Gr1 weakened to `L_t·L_u ⊆ L_{tu}`.
    pub fn new_unsaturated(
        s: InvSemigroup,
        l: Arc<FinGroupoid>,
        slices: Vec<PointSet>,
    ) -> Result<SGradedGroupoid, ActionError> {
        let saturated = Self::verify(&s, &l, &slices, false)?;
        Ok(SGradedGroupoid { s, l, slices, saturated })
    }

    fn verify(s: &InvSemigroup, l: &FinGroupoid, slices: &[PointSet], strict: bool) -> Result<bool, ActionError> {
        let n = s.len();
        if slices.len() != n || slices.iter().any(|u| u.len() != l.n1()) {
            return Err(ActionError::Malformed("one arrow set per element required".into()));
        }
        let mut saturated = true;
        for t in 0..n {
            for u in 0..n {
                let p = set_product(l, &slices[t], &slices[u]);
                let target = &slices[s.mul(t, u)];
                if p != *target {
                    saturated = false;
                    if strict || !p.is_subset(target) {
                        return Err(ActionError::Gr1(s.name(t).into(), s.name(u).into()));
                    }
                }
            }
        }
        for t in 0..n {
            if set_inverse(l, &slices[t]) != slices[s.star(t)] {
                return Err(ActionError::Gr2(s.name(t).into()));
            }
        }
        for t in 0..n {
            for u in 0..n {
                let mut meet = slices[t].clone();
                meet.intersect_with(&slices[u]);
                let mut lower = l.g1().empty_set();
                for v in (0..n).filter(|&v| s.leq(v, t) && s.leq(v, u)) {
                    lower.union_with(&slices[v]);
                }
                if meet != lower {
                    return Err(ActionError::Gr4(s.name(t).into(), s.name(u).into()));
                }
            }
        }
        let mut all = l.g1().empty_set();
        for u in slices {
            all.union_with(u);
        }
        if let Some(a) = (0..l.n1()).find(|&a| !all.contains(a)) {
            return Err(ActionError::Gr6(l.g1().name(a).into()));
        }
        for t in 0..n {
            if !l.g1().is_open(&slices[t]) {
                return Err(ActionError::SliceNotOpen(s.name(t).into()));
            }
        }
        Ok(saturated)
    }

    pub fn semigroup(&self) -> &InvSemigroup {
        &self.s
    }
    pub fn groupoid(&self) -> &FinGroupoid {
        &self.l
    }
    pub fn groupoid_arc(&self) -> Arc<FinGroupoid> {
        self.l.clone()
    }
    pub fn slice(&self, t: usize) -> &PointSet {
        &self.slices[t]
    }
    pub fn slices(&self) -> &[PointSet] {
        &self.slices
    }
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }
    /// Whether `L₀ = ∅` for a zero element (vacuous without one).
    pub fn zero_empty(&self) -> bool {
        self.s.zero().is_none_or(|z| self.slices[z].is_clear())
    }
    /// `Σ_t |L_t|`.
    pub fn total_slice_size(&self) -> usize {
        self.slices.iter().map(|u| u.count_ones(..)).sum()
    }

    fn structure(&self) -> Structure {
        let colour = (0..self.l.n1())
            .map(|a| (0..self.s.len()).filter(|&t| self.slices[t].contains(a)).map(|t| t as u32).collect())
            .collect();
        Structure::of_groupoid(&self.l, colour)
    }

    /// A grading-preserving isomorphism onto another grading by the same
    /// semigroup.
    pub fn find_isomorphism(&self, other: &SGradedGroupoid) -> Option<StructureIso> {
        if self.s != other.s {
            return None;
        }
        find_structure_iso(&self.structure(), &other.structure())
    }

    pub fn is_isomorphic(&self, other: &SGradedGroupoid) -> bool {
        self.find_isomorphism(other).is_some()
    }

    pub fn to_data(&self) -> GradingData {
        GradingData {
            semigroup: self.s.to_data(),
            groupoid: self.l.to_data(),
            slices: (0..self.s.len())
                .map(|t| (self.s.name(t).to_string(), self.l.g1().set_names(&self.slices[t])))
                .collect(),
        }
    }
}

/// JSON form of a grading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradingData {
    pub semigroup: SemigroupData,
    pub groupoid: GroupoidData,
    pub slices: BTreeMap<String, Vec<String>>,
}

impl GradingData {
    pub fn build(&self) -> Result<SGradedGroupoid, ActionError> {
        let s = self.semigroup.build()?;
        let l = Arc::new(self.groupoid.build()?);
        let slices = (0..s.len())
            .map(|t| match self.slices.get(s.name(t)) {
                Some(v) => l.g1().set_of(v).map_err(ActionError::from),
                None => Ok(l.g1().empty_set()),
            })
            .collect::<Result<Vec<_>, _>>()?;
        SGradedGroupoid::new(s, l, slices)
    }
}

/// The transformation groupoid with the class of each `(t, x)`.
#[derive(Debug, Clone)]
pub struct Transformation {
    pub graded: SGradedGroupoid,
    pub class_of: Vec<Vec<usize>>,
}

/// `G ⋊ S = ⊔X_t / ∼` where `(t,x) ∼ (u, j_{u,t}(x))`, with the quotient
/// topology and the canonical grading.
pub fn transformation_groupoid(a: &SAction) -> Result<Transformation, ActionError> {
    let s = a.semigroup();
    let n = s.len();
    let one = a.unit();
    let parts: Vec<&FinSpace> = (0..n).map(|t| a.x(t).space()).collect();
    let (union, origin) = tagged_union(&parts, |t, nm| format!("{nm}@{}", s.name(t)));
    let off = offsets(&parts);
    let mut uf = UnionFind::new(union.len());
    for (&(u, t), j) in &a.j {
        for (x, &y) in j.iter().enumerate() {
            uf.union(off[t] + x, off[u] + y);
        }
    }
    let (labels, classes) = uf.classes();
    let names: Vec<String> = classes
        .iter()
        .map(|members| {
            let pick = members.iter().find(|&&k| origin[k].0 == one).unwrap_or(&members[0]);
            let (t, x) = origin[*pick];
            if t == one {
                a.x(t).space().name(x).to_string()
            } else {
                union.name(*pick).to_string()
            }
        })
        .collect();
    let q = union.quotient(&labels, names)?;
    let nc = q.len();
    let mut r = vec![0; nc];
    let mut sr = vec![0; nc];
    for (k, &(t, x)) in origin.iter().enumerate() {
        r[labels[k]] = a.x(t).r()[x];
        sr[labels[k]] = a.x(t).s()[x];
    }
    let mut mult = vec![None; nc * nc];
    for (k1, &(t, x)) in origin.iter().enumerate() {
        for (k2, &(u, y)) in origin.iter().enumerate() {
            let Some(v) = a.mu(t, u, x, y) else { continue };
            let c = labels[off[s.mul(t, u)] + v];
            let slot = &mut mult[labels[k1] * nc + labels[k2]];
            match slot {
                Some(prev) if *prev != c => {
                    return Err(ActionError::NonUniqueOrMissing(format!(
                        "multiplication on classes of {} and {}",
                        union.name(k1),
                        union.name(k2)
                    )))
                }
                _ => *slot = Some(c),
            }
        }
    }
    let l = Arc::new(FinGroupoid::new(a.groupoid().g0().clone(), q, r, sr, mult)?);
    let class_of: Vec<Vec<usize>> = (0..n).map(|t| (0..a.x(t).len()).map(|x| labels[off[t] + x]).collect()).collect();
    let slices: Vec<PointSet> = class_of.iter().map(|cs| set_from(l.n1(), cs.iter().copied())).collect();
    // G sits in G ⋊ S as an open subgroupoid
    if !fintop::is_embedding(a.groupoid().g1(), l.g1(), &class_of[one]) || !l.g1().is_open(&slices[one]) {
        return Err(ActionError::CrossCheck("G is not an open subgroupoid of the transformation groupoid".into()));
    }
    if l.predicates().etale != a.groupoid().predicates().etale {
        return Err(ActionError::CrossCheck("étale flags of G and G ⋊ S differ".into()));
    }
    let graded = SGradedGroupoid::new(s.clone(), l, slices)?;
    Ok(Transformation { graded, class_of })
}

/// The action with `X_t = L_t` and multiplication from `L`.
pub fn action_from_grading(gr: &SGradedGroupoid) -> Result<SAction, ActionError> {
    let s = gr.semigroup();
    let h = gr.groupoid();
    let one = s.unit().ok_or(ActionError::NoUnit)?;
    let subs: Vec<(FinSpace, Vec<usize>)> = gr.slices().iter().map(|u| h.g1().subspace(u)).collect();
    let pos: Vec<HashMap<usize, usize>> = subs.iter().map(|(_, inc)| positions(inc)).collect();
    let (g1, inc1) = &subs[one];
    let n1 = inc1.len();
    let mut gm = vec![None; n1 * n1];
    for (a, &p) in inc1.iter().enumerate() {
        for (b, &q) in inc1.iter().enumerate() {
            gm[a * n1 + b] = h.mul(p, q).map(|v| pos[one][&v]);
        }
    }
    let g = Arc::new(FinGroupoid::new(
        h.g0().clone(),
        g1.clone(),
        inc1.iter().map(|&p| h.r()[p]).collect(),
        inc1.iter().map(|&p| h.s()[p]).collect(),
        gm,
    )?);
    let n = s.len();
    let xs: Vec<XSpace> = subs
        .iter()
        .map(|(sp, inc)| XSpace {
            space: sp.clone(),
            r: inc.iter().map(|&p| h.r()[p]).collect(),
            s: inc.iter().map(|&p| h.s()[p]).collect(),
        })
        .collect();
    let mut mu = Vec::with_capacity(n * n);
    for t in 0..n {
        for u in 0..n {
            let tu = s.mul(t, u);
            let mut tab = vec![None; subs[t].1.len() * subs[u].1.len()];
            for (x, &p) in subs[t].1.iter().enumerate() {
                for (y, &q) in subs[u].1.iter().enumerate() {
                    if let Some(v) = h.mul(p, q) {
                        tab[x * subs[u].1.len() + y] = Some(*pos[tu].get(&v).ok_or_else(|| {
                            ActionError::TargetMismatch(format!(
                                "{}·{} is not in L_{}",
                                h.g1().name(p),
                                h.g1().name(q),
                                s.name(tu)
                            ))
                        })?);
                    }
                }
            }
            mu.push(tab);
        }
    }
    SAction::new(s.clone(), g, xs, mu)
}

/// Checks both round trips between gradings and actions.
pub fn round_trip_grading(gr: &SGradedGroupoid) -> Result<bool, ActionError> {
    let a = action_from_grading(gr)?;
    let t = transformation_groupoid(&a)?;
    Ok(t.graded.is_isomorphic(gr))
}

pub fn round_trip_action(a: &SAction) -> Result<bool, ActionError> {
    let t = transformation_groupoid(a)?;
    let b = action_from_grading(&t.graded)?;
    Ok(find_action_isomorphism(a, &b).is_some())
}

/// `L_t = π⁻¹(t)` for a continuous homomorphism `π: H¹ → S`; returns the
/// grading and whether it is saturated.
pub fn grading_from_cocycle(
    h: &Arc<FinGroupoid>,
    s: &InvSemigroup,
    pi: &[usize],
) -> Result<SGradedGroupoid, ActionError> {
    if pi.len() != h.n1() || pi.iter().any(|&t| t >= s.len()) {
        return Err(ActionError::Malformed("cocycle has the wrong shape".into()));
    }
    for a in 0..h.n1() {
        if h.g1().nbhd(a).ones().any(|b| pi[b] != pi[a]) {
            return Err(ActionError::NotContinuous(format!("cocycle at {}", h.g1().name(a))));
        }
        for b in 0..h.n1() {
            if let Some(ab) = h.mul(a, b) {
                if pi[ab] != s.mul(pi[a], pi[b]) {
                    return Err(ActionError::NotMultiplicative(h.g1().name(a).into(), h.g1().name(b).into()));
                }
            }
        }
    }
    let slices: Vec<PointSet> = (0..s.len()).map(|t| set_from(h.n1(), (0..h.n1()).filter(|&a| pi[a] == t))).collect();
    SGradedGroupoid::new_unsaturated(s.clone(), h.clone(), slices)
}

/// Flags of the transformation groupoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProperFreeFlags {
    pub proper: bool,
    pub free: bool,
    pub basic: bool,
}

pub fn proper_free_flags(a: &SAction) -> Result<ProperFreeFlags, ActionError> {
    let t = transformation_groupoid(a)?;
    let p = t.graded.groupoid().predicates();
    if p.proper && p.free && !a.groupoid().predicates().basic {
        return Err(ActionError::CrossCheck("free and proper action on a non-basic groupoid".into()));
    }
    Ok(ProperFreeFlags { proper: p.proper, free: p.free, basic: p.basic })
}

// ---------------------------------------------------------------------------
// Actions on spaces.

/// An action by partial homeomorphisms `θ_t: D_{t*t} → D_{tt*}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SActionOnSpace {
    s: InvSemigroup,
    z: FinSpace,
    theta: Vec<Vec<Option<usize>>>,
    dom: Vec<PointSet>,
    adjoined_unit: bool,
}

impl SActionOnSpace {
    /// Verifies the partial homeomorphisms and the homomorphism property.
    /// A unit acting identically is adjoined when `S` has none.
    pub fn new(s: InvSemigroup, z: FinSpace, theta: Vec<Vec<Option<usize>>>) -> Result<SActionOnSpace, ActionError> {
        let (s, mut theta, adjoined_unit) = match s.unit() {
            Some(_) => (s, theta, false),
            None => {
                let mut th = theta;
                th.push((0..z.len()).map(Some).collect());
                (s.adjoin(Adjoin::Unit), th, true)
            }
        };
        let n = s.len();
        if theta.len() != n || theta.iter().any(|th| th.len() != z.len()) {
            return Err(ActionError::Malformed("one partial map per element required".into()));
        }
        for th in theta.iter_mut() {
            if th.iter().flatten().any(|&v| v >= z.len()) {
                return Err(ActionError::Malformed("partial map value out of range".into()));
            }
        }
        let mut dom = Vec::with_capacity(n);
        for t in 0..n {
            let d = set_from(z.len(), (0..z.len()).filter(|&p| theta[t][p].is_some()));
            if !z.is_open(&d) {
                return Err(ActionError::NotPartialHomeo(format!("domain of θ_{} is not open", s.name(t))));
            }
            let (ds, inc) = z.subspace(&d);
            let vals: Vec<usize> = inc.iter().map(|&p| theta[t][p].unwrap()).collect();
            let img = image(&vals, z.len(), &ds.full_set());
            if !z.is_open(&img) {
                return Err(ActionError::NotPartialHomeo(format!("image of θ_{} is not open", s.name(t))));
            }
            let (is, iinc) = z.subspace(&img);
            let ip = positions(&iinc);
            let local: Vec<usize> = vals.iter().map(|v| ip[v]).collect();
            if ds.len() != is.len() || !is_homeomorphism(&ds, &is, &local) {
                return Err(ActionError::NotPartialHomeo(format!("θ_{} is not a homeomorphism", s.name(t))));
            }
            dom.push(d);
        }
        for t in 0..n {
            for u in 0..n {
                for p in 0..z.len() {
                    if theta[s.mul(t, u)][p] != theta[u][p].and_then(|q| theta[t][q]) {
                        return Err(ActionError::NotHomomorphism(s.name(t).into(), s.name(u).into(), z.name(p).into()));
                    }
                }
            }
        }
        let one = s.unit().unwrap();
        if (0..z.len()).any(|p| theta[one][p] != Some(p)) {
            return Err(ActionError::NotHomomorphism(s.name(one).into(), s.name(one).into(), "unit".into()));
        }
        Ok(SActionOnSpace { s, z, theta, dom, adjoined_unit })
    }

    /// The action of `S` on `G⁰` through `φ: S → Bis(G)`.
    pub fn from_bisections(g: &FinGroupoid, s: &InvSemigroup, phi: &[PointSet]) -> Result<SActionOnSpace, ActionError> {
        let theta = phi
            .iter()
            .map(|b| {
                let mut th = vec![None; g.n0()];
                for a in b.ones() {
                    th[g.s()[a]] = Some(g.r()[a]);
                }
                th
            })
            .collect();
        SActionOnSpace::new(s.clone(), g.g0().clone(), theta)
    }

    /// Left translation on `G¹` through `φ: S → Bis(G)`: `θ_t(z) = a·z`
    /// for the `a ∈ φ(t)` with `s(a) = r(z)`.
    pub fn left_translation(
        g: &FinGroupoid,
        s: &InvSemigroup,
        phi: &[PointSet],
    ) -> Result<SActionOnSpace, ActionError> {
        let theta = phi
            .iter()
            .map(|b| (0..g.n1()).map(|z| b.ones().find(|&a| g.s()[a] == g.r()[z]).and_then(|a| g.mul(a, z))).collect())
            .collect();
        SActionOnSpace::new(s.clone(), g.g1().clone(), theta)
    }

    pub fn semigroup(&self) -> &InvSemigroup {
        &self.s
    }
    pub fn space(&self) -> &FinSpace {
        &self.z
    }
    /// `D_{t*t}`, the domain of `θ_t`.
    pub fn domain(&self, t: usize) -> &PointSet {
        &self.dom[t]
    }
    pub fn theta(&self, t: usize, z: usize) -> Option<usize> {
        self.theta[t][z]
    }
    pub fn adjoined_unit(&self) -> bool {
        self.adjoined_unit
    }

    /// The corresponding action on the space groupoid: `X_t = D_{t*t}`
    /// with `r = θ_t`, `s = inclusion`.
    pub fn induced_action(&self) -> Result<SAction, ActionError> {
        let zg = Arc::new(FinGroupoid::space(&self.z));
        let n = self.s.len();
        let mut xs = Vec::with_capacity(n);
        let mut incs = Vec::with_capacity(n);
        for t in 0..n {
            let p = from_partial_homeo_on(&zg, &self.dom[t], &self.theta[t])?;
            let (_, inc) = self.z.subspace(&self.dom[t]);
            xs.push(XSpace { space: p.space().clone(), r: p.r().to_vec(), s: p.s().to_vec() });
            incs.push(inc);
        }
        let pos: Vec<HashMap<usize, usize>> = incs.iter().map(|inc| positions(inc)).collect();
        let mut mu = Vec::with_capacity(n * n);
        for t in 0..n {
            for u in 0..n {
                let tu = self.s.mul(t, u);
                let mut tab = vec![None; incs[t].len() * incs[u].len()];
                for (x, &z1) in incs[t].iter().enumerate() {
                    for (y, &z2) in incs[u].iter().enumerate() {
                        if self.theta[u][z2] == Some(z1) {
                            tab[x * incs[u].len() + y] = pos[tu].get(&z2).copied();
                        }
                    }
                }
                mu.push(tab);
            }
        }
        SAction::new(self.s.clone(), zg, xs, mu)
    }

    pub fn to_data(&self) -> SpaceActionData {
        SpaceActionData {
            semigroup: self.s.to_data(),
            space: self.z.to_data(),
            theta: (0..self.s.len())
                .map(|t| {
                    let m = (0..self.z.len())
                        .filter_map(|p| {
                            self.theta[t][p].map(|q| (self.z.name(p).to_string(), self.z.name(q).to_string()))
                        })
                        .collect();
                    (self.s.name(t).to_string(), m)
                })
                .collect(),
        }
    }
}

/// JSON form of an action on a space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceActionData {
    pub semigroup: SemigroupData,
    pub space: SpaceData,
    pub theta: BTreeMap<String, BTreeMap<String, String>>,
}

impl SpaceActionData {
    pub fn build(&self) -> Result<SActionOnSpace, ActionError> {
        let s = self.semigroup.build()?;
        let z = self.space.build()?;
        let theta = (0..s.len())
            .map(|t| {
                let m = self.theta.get(s.name(t));
                (0..z.len())
                    .map(|p| match m.and_then(|m| m.get(z.name(p))) {
                        Some(q) => z.point(q).map(Some),
                        None => Ok(None),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        SActionOnSpace::new(s, z, theta)
    }
}

/// Germ groupoid with Exel's germ relation: `[t,z] = [u,z]` iff some
/// idempotent `e` with `z ∈ D_e` has `te = ue`.  The result is checked
/// against the transformation groupoid of the induced action.
pub fn germ_groupoid(a: &SActionOnSpace) -> Result<SGradedGroupoid, ActionError> {
    let (s, z) = (a.semigroup(), a.space());
    let n = s.len();
    let idem = s.idempotents();
    let same =
        |t: usize, u: usize, p: usize| idem.iter().any(|&e| a.domain(e).contains(p) && s.mul(t, e) == s.mul(u, e));
    // germs: (t, z) pairs, grouped
    let mut germs: Vec<(usize, usize)> = Vec::new();
    let mut germ_of: Vec<Vec<Option<usize>>> = vec![vec![None; z.len()]; n];
    for p in 0..z.len() {
        for t in 0..n {
            if !a.domain(t).contains(p) || germ_of[t][p].is_some() {
                continue;
            }
            let k = germs.len();
            germs.push((t, p));
            for u in t..n {
                if a.domain(u).contains(p) && same(t, u, p) {
                    germ_of[u][p] = Some(k);
                }
            }
        }
    }
    let ng = germs.len();
    let names: Vec<String> = germs.iter().map(|&(t, p)| format!("[{},{}]", s.name(t), z.name(p))).collect();
    let nbhd: Vec<PointSet> = germs
        .iter()
        .map(|&(t0, p)| {
            let mut acc = set_from(ng, 0..ng);
            for t in (0..n).filter(|&t| germ_of[t][p] == germ_of[t0][p]) {
                acc.intersect_with(&set_from(ng, z.nbhd(p).ones().filter_map(|q| germ_of[t][q])));
            }
            acc
        })
        .collect();
    let g1 = FinSpace::from_neighbourhoods(names, nbhd)?;
    let r: Vec<usize> = germs.iter().map(|&(t, p)| a.theta(t, p).unwrap()).collect();
    let sr: Vec<usize> = germs.iter().map(|&(_, p)| p).collect();
    let mut mult = vec![None; ng * ng];
    for (k1, &(t, p1)) in germs.iter().enumerate() {
        for (k2, &(u, p2)) in germs.iter().enumerate() {
            if sr[k1] == r[k2] {
                debug_assert_eq!(p1, r[k2]);
                mult[k1 * ng + k2] = germ_of[s.mul(t, u)][p2];
                if mult[k1 * ng + k2].is_none() {
                    return Err(ActionError::CrossCheck("product germ undefined".into()));
                }
            }
        }
    }
    let l = Arc::new(FinGroupoid::new(z.clone(), g1, r, sr, mult)?);
    let slices = (0..n).map(|t| set_from(ng, (0..z.len()).filter_map(|p| germ_of[t][p]))).collect();
    let graded = SGradedGroupoid::new(s.clone(), l, slices)?;
    let tg = transformation_groupoid(&a.induced_action()?)?;
    if !tg.graded.is_isomorphic(&graded) {
        return Err(ActionError::CrossCheck("germ groupoid differs from the transformation groupoid".into()));
    }
    Ok(graded)
}

/// Pull-back `p*H` of a groupoid along a map `p: X → H⁰`: arrows
/// `(x₁, h, x₂)` with `p(x₁) = r(h)`, `p(x₂) = s(h)`.
pub fn pullback_groupoid(h: &FinGroupoid, p: &CMap) -> Result<(FinGroupoid, Vec<(usize, usize, usize)>), ActionError> {
    let x = &p.dom;
    let (xh, xh_pairs) = product(x, h.g1());
    let (xhx, trip_pairs) = product(&xh, x);
    let keep: Vec<usize> = (0..xhx.len())
        .filter(|&k| {
            let (i, x2) = trip_pairs[k];
            let (x1, a) = xh_pairs[i];
            p.map[x1] == h.r()[a] && p.map[x2] == h.s()[a]
        })
        .collect();
    let (arr, inc) = xhx.subspace(&set_from(xhx.len(), keep.iter().copied()));
    let triples: Vec<(usize, usize, usize)> = inc
        .iter()
        .map(|&k| {
            let (i, x2) = trip_pairs[k];
            let (x1, a) = xh_pairs[i];
            (x1, a, x2)
        })
        .collect();
    let names: Vec<String> =
        triples.iter().map(|&(x1, a, x2)| format!("({},{},{})", x.name(x1), h.g1().name(a), x.name(x2))).collect();
    let arr = FinSpace::from_neighbourhoods(names, (0..arr.len()).map(|k| arr.nbhd(k).clone()).collect())?;
    let pos: HashMap<(usize, usize, usize), usize> = triples.iter().enumerate().map(|(k, &t)| (t, k)).collect();
    let m = triples.len();
    let mut mult = vec![None; m * m];
    for (k1, &(x1, a, x2)) in triples.iter().enumerate() {
        for (k2, &(y1, b, y2)) in triples.iter().enumerate() {
            if x2 == y1 {
                mult[k1 * m + k2] = Some(pos[&(x1, h.mul(a, b).unwrap(), y2)]);
            }
        }
    }
    let r = triples.iter().map(|t| t.0).collect();
    let s = triples.iter().map(|t| t.2).collect();
    Ok((FinGroupoid::new(x.clone(), arr, r, s, mult)?, triples))
}

/// Result of desingularizing a space action along a cover.
#[derive(Debug, Clone)]
pub struct Desingularized {
    pub graded: SGradedGroupoid,
    /// The verified global equivalence `X ×_{p,r} (Z⋊S)¹` between the
    /// pull-back and the germ groupoid.
    pub equivalence: PartialEquivalence,
}

/// The pull-back of `Z ⋊ S` to `⊔U_i` with the grading by
/// `{(x₁,γ,x₂) : γ ∈ L_t}`.
pub fn desingularize(a: &SActionOnSpace, cover: &[PointSet]) -> Result<Desingularized, ActionError> {
    let p = cover_map(a.space(), cover)?;
    let germ = germ_groupoid(a)?;
    let h = germ.groupoid_arc();
    let (pg, triples) = pullback_groupoid(&h, &p)?;
    let pg = Arc::new(pg);
    let slices: Vec<PointSet> = (0..a.semigroup().len())
        .map(|t| set_from(pg.n1(), (0..triples.len()).filter(|&k| germ.slice(t).contains(triples[k].1))))
        .collect();
    let graded = SGradedGroupoid::new(a.semigroup().clone(), pg.clone(), slices)?;
    // X ×_{p,r} H¹ with left p*H and right H actions
    let (sp, pairs) = fiber_product(&p.dom, &p.map, h.g1(), h.r());
    let ppos = positions_pairs(&pairs);
    let m = pairs.len();
    let mut left = vec![None; pg.n1() * m];
    for (k1, &(x1, a1, x2)) in triples.iter().enumerate() {
        for (k2, &(x, g)) in pairs.iter().enumerate() {
            if x == x2 {
                left[k1 * m + k2] = h.mul(a1, g).map(|v| ppos[&(x1, v)]);
            }
        }
    }
    let mut right = vec![None; m * h.n1()];
    for (k, &(x, g)) in pairs.iter().enumerate() {
        for b in 0..h.n1() {
            right[k * h.n1() + b] = h.mul(g, b).map(|v| ppos[&(x, v)]);
        }
    }
    let r = pairs.iter().map(|&(x, _)| x).collect();
    let s = pairs.iter().map(|&(_, g)| h.s()[g]).collect();
    let equivalence = PartialEquivalence::new(pg, h, sp, r, s, left, right)?;
    if !equivalence.is_global() {
        return Err(ActionError::NotGlobalEquivalence);
    }
    Ok(Desingularized { graded, equivalence })
}

// ---------------------------------------------------------------------------
// Transport along an equivalence.

/// Result of transporting an action along a global equivalence.
#[derive(Debug, Clone)]
pub struct Transported {
    pub action: SAction,
    /// The verified global equivalence between the two transformation
    /// groupoids.
    pub connecting: PartialEquivalence,
}

/// `X'_t = Y ×_G X_t ×_G Y*`, composites normalized left to right, with
/// `X'_1` identified with `H¹` through the pairing.
pub fn transport_action(a: &SAction, y: &PartialEquivalence) -> Result<Transported, ActionError> {
    if y.right() != a.groupoid() {
        return Err(PeqError::GroupoidMismatch.into());
    }
    if !y.is_global() {
        return Err(ActionError::NotGlobalEquivalence);
    }
    let s = a.semigroup();
    let n = s.len();
    let one = a.unit();
    let h = y.left_arc();
    let g = a.groupoid();
    let yd = dual(y);
    let mut inners = Vec::with_capacity(n);
    let mut outers = Vec::with_capacity(n);
    for t in 0..n {
        let inner = compose(y, a.x(t))?;
        let outer = compose(&inner.peq, &yd)?;
        inners.push(inner);
        outers.push(outer);
    }
    let triple =
        |t: usize, y1: usize, x: usize, y2: usize| -> Option<usize> { outers[t].class(inners[t].class(y1, x)?, y2) };
    let rep = |t: usize, c: usize| -> (usize, usize, usize) {
        let (ci, y2) = outers[t].representative(c);
        let (y1, x) = inners[t].representative(ci);
        (y1, x, y2)
    };
    // X'_1 → H¹: [y1, g, y2*] ↦ the h with y1·g = h·y2
    let kappa: Vec<usize> = (0..outers[one].peq.len())
        .map(|c| {
            let (y1, a1, y2) = rep(one, c);
            y.left_pairing(y.act_right(y1, a1).unwrap(), y2).unwrap()
        })
        .collect();
    if !is_homeomorphism(outers[one].peq.space(), h.g1(), &kappa) {
        return Err(ActionError::CrossCheck("Y ×_G G¹ ×_G Y* is not canonically H¹".into()));
    }
    let mut kappa_inv = vec![0; kappa.len()];
    for (c, &k) in kappa.iter().enumerate() {
        kappa_inv[k] = c;
    }
    let to_local = |t: usize, c: usize| if t == one { kappa[c] } else { c };
    let from_local = |t: usize, c: usize| if t == one { kappa_inv[c] } else { c };
    let xs: Vec<XSpace> = (0..n)
        .map(|t| {
            if t == one {
                XSpace { space: h.g1().clone(), r: h.r().to_vec(), s: h.s().to_vec() }
            } else {
                let p = &outers[t].peq;
                XSpace { space: p.space().clone(), r: p.r().to_vec(), s: p.s().to_vec() }
            }
        })
        .collect();
    let mut mu = Vec::with_capacity(n * n);
    for t in 0..n {
        for u in 0..n {
            let tu = s.mul(t, u);
            let (nt, nu) = (xs[t].space.len(), xs[u].space.len());
            let mut tab = vec![None; nt * nu];
            for c1l in 0..nt {
                for c2l in 0..nu {
                    if xs[t].s[c1l] != xs[u].r[c2l] {
                        continue;
                    }
                    let (y1, x, y2) = rep(t, from_local(t, c1l));
                    let (y3, x2, y4) = rep(u, from_local(u, c2l));
                    let gg = y.right_pairing(y2, y3).ok_or_else(|| ActionError::CrossCheck("pairing".into()))?;
                    let gx2 = a.x(u).act_left(gg, x2).ok_or_else(|| ActionError::CrossCheck("action".into()))?;
                    let v = a.mu(t, u, x, gx2).ok_or_else(|| ActionError::CrossCheck("product".into()))?;
                    let c = triple(tu, y1, v, y4).ok_or_else(|| ActionError::CrossCheck("class".into()))?;
                    tab[c1l * nu + c2l] = Some(to_local(tu, c));
                }
            }
            mu.push(tab);
        }
    }
    let action = SAction::new(s.clone(), h.clone(), xs, mu)?;
    // connecting bibundle between H ⋊ S and G ⋊ S: (Y ×_{s,r} (G⋊S)¹)/G
    let tg = transformation_groupoid(a)?;
    let th = transformation_groupoid(&action)?;
    let (lg, lh) = (tg.graded.groupoid_arc(), th.graded.groupoid_arc());
    let g_in = &tg.class_of[one];
    let (fp, pairs) = fiber_product(y.space(), y.s(), lg.g1(), lg.r());
    let ppos = positions_pairs(&pairs);
    let mut uf = UnionFind::new(pairs.len());
    for &(y0, l) in &pairs {
        for ga in 0..g.n1() {
            if g.r()[ga] != lg.r()[l] {
                continue;
            }
            // (y·g, l) ~ (y, g·l)
            if let (Some(yg), Some(gl)) = (y.act_right(y0, ga), lg.mul(g_in[ga], l)) {
                uf.union(ppos[&(yg, l)], ppos[&(y0, gl)]);
            }
        }
    }
    let (labels, classes) = uf.classes();
    let names: Vec<String> = classes.iter().map(|c| fp.name(c[0]).to_string()).collect();
    let zsp = fp.quotient(&labels, names)?;
    let nz = zsp.len();
    let reps: Vec<(usize, usize)> = classes.iter().map(|c| pairs[c[0]]).collect();
    let mut right = vec![None; nz * lg.n1()];
    for (c, &(y0, l)) in reps.iter().enumerate() {
        for l2 in 0..lg.n1() {
            right[c * lg.n1() + l2] = lg.mul(l, l2).map(|v| labels[ppos[&(y0, v)]]);
        }
    }
    // left action: a class of H⋊S represented by (t, c'), c' = [y1, x, y2*]
    let mut left = vec![None; lh.n1() * nz];
    for t in 0..n {
        for cl in 0..action.x(t).len() {
            let lam = th.class_of[t][cl];
            let (y1, x, y2) = rep(t, from_local(t, cl));
            for (k, &(y0, l)) in pairs.iter().enumerate() {
                if y.r()[y2] != y.r()[y0] {
                    continue;
                }
                let gg = y.right_pairing(y2, y0).unwrap();
                let prod = lg.mul(tg.class_of[t][x], g_in[gg]).and_then(|v| lg.mul(v, l));
                let Some(v) = prod else {
                    return Err(ActionError::CrossCheck("connecting action undefined".into()));
                };
                let val = labels[ppos[&(y1, v)]];
                let slot = &mut left[lam * nz + labels[k]];
                match slot {
                    Some(prev) if *prev != val => {
                        return Err(ActionError::CrossCheck("connecting action not well defined".into()))
                    }
                    _ => *slot = Some(val),
                }
            }
        }
    }
    let r = reps.iter().map(|&(y0, _)| y.r()[y0]).collect();
    let sa = reps.iter().map(|&(_, l)| lg.s()[l]).collect();
    let connecting = PartialEquivalence::new(lh, lg, zsp, r, sa, left, right)?;
    if !connecting.is_global() {
        return Err(ActionError::NotGlobalEquivalence);
    }
    Ok(Transported { action, connecting })
}

// ---------------------------------------------------------------------------
// Models.

/// The extended grading of `H ⋊ S` by `Bis(G)`.
#[derive(Debug, Clone)]
pub struct ExtendedGrading {
    pub bisections: Bisections,
    pub graded: SGradedGroupoid,
}

/// Extends the grading of `H ⋊ S` to `Bis(G)` for a model `φ: S → Bis(G)`
/// and an equivariant `ψ: H⁰/H → G⁰`: `l ∈ L̄_t` iff `l ∈ L_u` for some
/// `u` such that `t` and `φ(u)` have the same germ at `ψ(s(l))`.
pub fn extend_grading_to_bisections(
    a: &SAction,
    g: &FinGroupoid,
    phi: &[PointSet],
    psi: &[usize],
) -> Result<ExtendedGrading, ActionError> {
    let s = a.semigroup();
    let n = s.len();
    let bis = bisections(g)?;
    let phi_idx: Vec<usize> = phi
        .iter()
        .map(|b| {
            bis.element_of(b).ok_or_else(|| ActionError::NotAModel(format!("{} is not a bisection", g.g1().fmt_set(b))))
        })
        .collect::<Result<_, _>>()?;
    s.check_homomorphism(&bis.semigroup, &phi_idx)?;
    let obj_action = SActionOnSpace::from_bisections(g, &bis.semigroup, &bis.sets)?;
    if let Some(f) = z_isomorphism_check(s, &phi_idx, &obj_action)? {
        return Err(ActionError::NotAModel(format!("{f:?}")));
    }
    let h = a.groupoid();
    let (orb, labels) = h.orbit_space();
    if psi.len() != orb.len() || psi.iter().any(|&v| v >= g.n0()) {
        return Err(ActionError::Malformed("ψ has the wrong shape".into()));
    }
    if !is_continuous(&orb, g.g0(), psi) {
        return Err(ActionError::NotContinuous("ψ".into()));
    }
    for t in 0..n {
        let xt = a.x(t);
        let dom_h = set_from(orb.len(), xt.s().iter().map(|&v| labels[v]));
        let dom_g = image(g.s(), g.n0(), &phi[t]);
        for o in 0..orb.len() {
            if dom_h.contains(o) != dom_g.contains(psi[o]) {
                return Err(ActionError::NotEquivariant(format!("domains of {} at {}", s.name(t), orb.name(o))));
            }
        }
        for x in 0..xt.len() {
            let (o_s, o_r) = (labels[xt.s()[x]], labels[xt.r()[x]]);
            let arrow = phi[t].ones().find(|&b| g.s()[b] == psi[o_s]).unwrap();
            if g.r()[arrow] != psi[o_r] {
                return Err(ActionError::NotEquivariant(format!("{} at {}", s.name(t), orb.name(o_s))));
            }
        }
    }
    let tg = transformation_groupoid(a)?;
    let l = tg.graded.groupoid_arc();
    let lslices = tg.graded.slices();
    let nb = bis.semigroup.len();
    let mut slices = Vec::with_capacity(nb);
    for k in 0..nb {
        let mut acc = l.g1().empty_set();
        for u in 0..n {
            let mut meet = bis.sets[k].clone();
            meet.intersect_with(&phi[u]);
            let v = image(g.s(), g.n0(), &meet);
            for la in lslices[u].ones() {
                if v.contains(psi[labels[l.s()[la]]]) {
                    acc.insert(la);
                }
            }
        }
        slices.push(acc);
    }
    let graded = SGradedGroupoid::new(bis.semigroup.clone(), l.clone(), slices)?;
    for u in 0..n {
        if graded.slice(phi_idx[u]) != &lslices[u] {
            return Err(ActionError::CrossCheck(format!("extended slice at φ({}) differs", s.name(u))));
        }
    }
    let unit_fibre = &lslices[a.unit()];
    for e in bis.semigroup.idempotents() {
        let uset = image(g.s(), g.n0(), &bis.sets[e]);
        let expect = set_from(
            l.n1(),
            unit_fibre
                .ones()
                .filter(|&la| uset.contains(psi[labels[l.s()[la]]]) && uset.contains(psi[labels[l.r()[la]]])),
        );
        if graded.slice(e) != &expect {
            return Err(ActionError::CrossCheck(format!("extended slice at {} differs", bis.semigroup.name(e))));
        }
    }
    Ok(ExtendedGrading { bisections: bis, graded })
}
