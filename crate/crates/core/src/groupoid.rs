//! Finite topological groupoids.
//!
//! Composition is a dense table over arrow pairs; `None` marks pairs that
//! are not composable.  Verification checks the algebraic laws, continuity
//! of all structure maps, and that both shear maps of the composable-pair
//! space are homeomorphisms.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bibundle::PartialEquivalence;
use crate::fintop::{
    self, fiber_product, first_discontinuity, full_set, image, is_closed_map, is_embedding, is_etale, is_homeomorphism,
    is_open_map, is_surjective, set_from, tagged_union, FinSpace, PointSet, SpaceData, TopError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupoidError {
    #[error(transparent)]
    Top(#[from] TopError),
    #[error("malformed groupoid data: {0}")]
    Malformed(String),
    #[error("composability mismatch at ({0},{1})")]
    Composability(String, String),
    #[error("range or source map is not an open continuous surjection: {0}")]
    RangeSourceNotOpen(String),
    #[error("range/source of product ({0},{1}) is wrong")]
    RangeSourceOfProduct(String, String),
    #[error("not associative at ({0},{1},{2})")]
    NotAssociative(String, String, String),
    #[error("unit or inverse defect: {0}")]
    UnitInverseDefect(String),
    #[error("multiplication is not continuous at {0}")]
    MultNotContinuous(String),
    #[error("shear map is not a homeomorphism: {0}")]
    ShearNotHomeomorphism(String),
    #[error("subset is not invariant: arrow {0} crosses its boundary")]
    NotInvariant(String),
    #[error("subset {0} is not open")]
    NotOpen(String),
    #[error("map is not an open continuous surjection")]
    NotOpenSurjection,
    #[error("not a cover: point {0} is uncovered")]
    NotACover(String),
    #[error("equivalence is not global")]
    NotGlobalEquivalence,
}

/// A topological groupoid with finite object and arrow spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinGroupoid {
    g0: FinSpace,
    g1: FinSpace,
    r: Vec<usize>,
    s: Vec<usize>,
    mult: Vec<Option<usize>>,
    unit: Vec<usize>,
    inv: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupoidPredicates {
    pub etale: bool,
    pub basic: bool,
    pub proper: bool,
    pub free: bool,
}

impl FinGroupoid {
    /// Verifies raw structure data; units and inverses are derived.
    pub fn new(
        g0: FinSpace,
        g1: FinSpace,
        r: Vec<usize>,
        s: Vec<usize>,
        mult: Vec<Option<usize>>,
    ) -> Result<FinGroupoid, GroupoidError> {
        let (n0, n1) = (g0.len(), g1.len());
        if r.len() != n1 || s.len() != n1 || mult.len() != n1 * n1 {
            return Err(GroupoidError::Malformed("table sizes do not match the arrow space".into()));
        }
        if r.iter().chain(&s).any(|&x| x >= n0) || mult.iter().flatten().any(|&g| g >= n1) {
            return Err(GroupoidError::Malformed("index out of range".into()));
        }
        for (name, m) in [("r", &r), ("s", &s)] {
            if let Some(g) = first_discontinuity(&g1, &g0, m) {
                return Err(GroupoidError::RangeSourceNotOpen(format!("{name} not continuous at {}", g1.name(g))));
            }
            if !is_open_map(&g1, &g0, m) {
                return Err(GroupoidError::RangeSourceNotOpen(format!("{name} not open")));
            }
            if !is_surjective(n0, m) {
                return Err(GroupoidError::RangeSourceNotOpen(format!("{name} not surjective")));
            }
        }
        let nm = |g: usize| g1.name(g).to_string();
        for g in 0..n1 {
            for h in 0..n1 {
                let gh = mult[g * n1 + h];
                if (s[g] == r[h]) != gh.is_some() {
                    return Err(GroupoidError::Composability(nm(g), nm(h)));
                }
                if let Some(k) = gh {
                    if s[k] != s[h] || r[k] != r[g] {
                        return Err(GroupoidError::RangeSourceOfProduct(nm(g), nm(h)));
                    }
                }
            }
        }
        let m = |g: usize, h: usize| mult[g * n1 + h];
        // units
        let mut unit = Vec::with_capacity(n0);
        for x in 0..n0 {
            let e = (0..n1).find(|&e| {
                r[e] == x
                    && s[e] == x
                    && (0..n1).all(|g| (r[g] != x || m(e, g) == Some(g)) && (s[g] != x || m(g, e) == Some(g)))
            });
            match e {
                Some(e) => unit.push(e),
                None => {
                    return Err(GroupoidError::UnitInverseDefect(format!("no unit arrow at object {}", g0.name(x))))
                }
            }
        }
        let mut inv = Vec::with_capacity(n1);
        for g in 0..n1 {
            let h = (0..n1).find(|&h| m(g, h) == Some(unit[r[g]]) && m(h, g) == Some(unit[s[g]]));
            match h {
                Some(h) => inv.push(h),
                None => return Err(GroupoidError::UnitInverseDefect(format!("arrow {} has no inverse", nm(g)))),
            }
        }
        for g in 0..n1 {
            for h in 0..n1 {
                let Some(gh) = m(g, h) else { continue };
                for k in 0..n1 {
                    if let (Some(hk), Some(a)) = (m(h, k), m(gh, k)) {
                        if m(g, hk) != Some(a) {
                            return Err(GroupoidError::NotAssociative(nm(g), nm(h), nm(k)));
                        }
                    }
                }
            }
        }
        if let Some(x) = first_discontinuity(&g0, &g1, &unit) {
            return Err(GroupoidError::UnitInverseDefect(format!("unit map not continuous at {}", g0.name(x))));
        }
        if let Some(g) = first_discontinuity(&g1, &g1, &inv) {
            return Err(GroupoidError::UnitInverseDefect(format!("inversion not continuous at {}", nm(g))));
        }
        let gpd = FinGroupoid { g0, g1, r, s, mult, unit, inv };
        gpd.check_topology_of_multiplication()?;
        Ok(gpd)
    }

    fn check_topology_of_multiplication(&self) -> Result<(), GroupoidError> {
        let (c, pairs) = self.composable_pairs();
        let prod: Vec<usize> = pairs.iter().map(|&(g, h)| self.mul(g, h).unwrap()).collect();
        if let Some(k) = first_discontinuity(&c, &self.g1, &prod) {
            return Err(GroupoidError::MultNotContinuous(c.name(k).to_string()));
        }
        let (ss, ss_pairs) = fiber_product(&self.g1, &self.s, &self.g1, &self.s);
        let (rr, rr_pairs) = fiber_product(&self.g1, &self.r, &self.g1, &self.r);
        let shear1 = map_into_pairs(&pairs, &ss_pairs, |(g, h)| (self.mul(g, h).unwrap(), h));
        let shear2 = map_into_pairs(&pairs, &rr_pairs, |(g, h)| (g, self.mul(g, h).unwrap()));
        match shear1 {
            Some(f) if is_homeomorphism(&c, &ss, &f) => {}
            _ => return Err(GroupoidError::ShearNotHomeomorphism("(g,h) ↦ (gh,h)".into())),
        }
        match shear2 {
            Some(f) if is_homeomorphism(&c, &rr, &f) => {}
            _ => return Err(GroupoidError::ShearNotHomeomorphism("(g,h) ↦ (g,gh)".into())),
        }
        // Openness of the multiplication follows from the axioms; assert it.
        if !is_open_map(&c, &self.g1, &prod) {
            return Err(GroupoidError::ShearNotHomeomorphism("multiplication is not open".into()));
        }
        Ok(())
    }

    /// The space of composable pairs `G¹ ×_{s,r} G¹`.
    pub fn composable_pairs(&self) -> (FinSpace, Vec<(usize, usize)>) {
        fiber_product(&self.g1, &self.s, &self.g1, &self.r)
    }

    /// A space viewed as a groupoid with only identity arrows.
    pub fn space(z: &FinSpace) -> FinGroupoid {
        let n = z.len();
        let id: Vec<usize> = (0..n).collect();
        let mut mult = vec![None; n * n];
        for x in 0..n {
            mult[x * n + x] = Some(x);
        }
        FinGroupoid { g0: z.clone(), g1: z.clone(), r: id.clone(), s: id.clone(), mult, unit: id.clone(), inv: id }
    }

    /// A finite group from its multiplication table, as a one-object groupoid
    /// on discrete spaces.
    pub fn group<S: AsRef<str>>(elements: &[S], table: &[Vec<usize>]) -> Result<FinGroupoid, GroupoidError> {
        let n = elements.len();
        let g0 = FinSpace::discrete(&["*"]);
        let g1 = FinSpace::discrete(elements);
        let mut mult = vec![None; n * n];
        for a in 0..n {
            for b in 0..n {
                mult[a * n + b] = Some(
                    *table
                        .get(a)
                        .and_then(|row| row.get(b))
                        .ok_or_else(|| GroupoidError::Malformed("group table is not square".into()))?,
                );
            }
        }
        FinGroupoid::new(g0, g1, vec![0; n], vec![0; n], mult)
    }

    /// The cyclic group `Z/n` with elements named `0..n`.
    pub fn cyclic(n: usize) -> FinGroupoid {
        let names: Vec<String> = (0..n).map(|k| k.to_string()).collect();
        let table: Vec<Vec<usize>> = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        FinGroupoid::group(&names, &table).unwrap()
    }

    /// Pair groupoid on a discrete set; arrows are named `(x,y)` with
    /// range `x` and source `y`.
    pub fn pair<S: AsRef<str>>(points: &[S]) -> FinGroupoid {
        let z = FinSpace::discrete(points);
        let f = vec![0; z.len()];
        let pt = FinSpace::discrete(&["*"]);
        covering_groupoid_raw(&z, &pt, &f)
    }

    pub fn g0(&self) -> &FinSpace {
        &self.g0
    }
    pub fn g1(&self) -> &FinSpace {
        &self.g1
    }
    pub fn r(&self) -> &[usize] {
        &self.r
    }
    pub fn s(&self) -> &[usize] {
        &self.s
    }
    pub fn units(&self) -> &[usize] {
        &self.unit
    }
    pub fn unit(&self, x: usize) -> usize {
        self.unit[x]
    }
    pub fn inverse(&self, g: usize) -> usize {
        self.inv[g]
    }
    pub fn inverses(&self) -> &[usize] {
        &self.inv
    }
    pub fn n0(&self) -> usize {
        self.g0.len()
    }
    pub fn n1(&self) -> usize {
        self.g1.len()
    }
    pub fn mul(&self, g: usize, h: usize) -> Option<usize> {
        self.mult[g * self.n1() + h]
    }
    pub fn mult_table(&self) -> &[Option<usize>] {
        &self.mult
    }
    pub fn is_unit(&self, g: usize) -> bool {
        self.unit[self.r[g]] == g
    }

    /// Arrows from `y` to `x`.
    pub fn hom(&self, x: usize, y: usize) -> Vec<usize> {
        (0..self.n1()).filter(|&g| self.r[g] == x && self.s[g] == y).collect()
    }

    pub fn is_invariant(&self, u: &PointSet) -> bool {
        (0..self.n1()).all(|g| u.contains(self.r[g]) == u.contains(self.s[g]))
    }

    /// `r⁻¹(U)` (equal to `s⁻¹(U)` for invariant `U`).
    pub fn arrows_over(&self, u: &PointSet) -> PointSet {
        set_from(self.n1(), (0..self.n1()).filter(|&g| u.contains(self.r[g]) && u.contains(self.s[g])))
    }

    /// All open invariant subsets of the object space.
    pub fn invariant_opens(&self) -> Vec<PointSet> {
        self.g0.opens().into_iter().filter(|u| self.is_invariant(u)).collect()
    }

    /// `G_U` for an open invariant `U`.
    pub fn restrict(&self, u: &PointSet) -> Result<FinGroupoid, GroupoidError> {
        if !self.g0.is_open(u) {
            return Err(GroupoidError::NotOpen(self.g0.fmt_set(u)));
        }
        if let Some(g) = (0..self.n1()).find(|&g| u.contains(self.r[g]) != u.contains(self.s[g])) {
            return Err(GroupoidError::NotInvariant(self.g1.name(g).to_string()));
        }
        let arrows = self.arrows_over(u);
        let (g0, inc0) = self.g0.subspace(u);
        let (g1, inc1) = self.g1.subspace(&arrows);
        let pos0: HashMap<usize, usize> = inc0.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        let pos1: HashMap<usize, usize> = inc1.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        let n = inc1.len();
        let mut mult = vec![None; n * n];
        for (a, &g) in inc1.iter().enumerate() {
            for (b, &h) in inc1.iter().enumerate() {
                mult[a * n + b] = self.mul(g, h).map(|k| pos1[&k]);
            }
        }
        let r = inc1.iter().map(|&g| pos0[&self.r[g]]).collect();
        let s = inc1.iter().map(|&g| pos0[&self.s[g]]).collect();
        FinGroupoid::new(g0, g1, r, s, mult)
    }

    /// Orbit space with the quotient topology and the projection.  Singleton
    /// orbits keep the name of their point; larger orbits are named by their
    /// sorted member set.
    pub fn orbit_space(&self) -> (FinSpace, Vec<usize>) {
        let n0 = self.n0();
        let mut uf = UnionFind::new(n0);
        for g in 0..self.n1() {
            uf.union(self.r[g], self.s[g]);
        }
        let (labels, classes) = uf.classes();
        let names = classes
            .iter()
            .map(|c| {
                if c.len() == 1 {
                    self.g0.name(c[0]).to_string()
                } else {
                    self.g0.fmt_set(&set_from(n0, c.iter().copied()))
                }
            })
            .collect();
        let q = self.g0.quotient(&labels, names).expect("orbit labelling is surjective");
        debug_assert!(is_open_map(&self.g0, &q, &labels));
        (q, labels)
    }

    pub fn predicates(&self) -> GroupoidPredicates {
        let (sq, pairs) = fintop::product(&self.g0, &self.g0);
        let n0 = self.n0();
        let rs: Vec<usize> = (0..self.n1()).map(|g| self.r[g] * n0 + self.s[g]).collect();
        let sr: Vec<usize> = (0..self.n1()).map(|g| self.s[g] * n0 + self.r[g]).collect();
        debug_assert!(pairs.iter().enumerate().all(|(k, &(a, b))| k == a * n0 + b));
        GroupoidPredicates {
            etale: is_etale(&self.g1, &self.g0, &self.r),
            basic: is_embedding(&self.g1, &sq, &rs),
            proper: is_closed_map(&self.g1, &sq, &sr),
            free: fintop::is_injective(&rs),
        }
    }

    /// Isomorphism onto `other`, if any.
    pub fn find_isomorphism(&self, other: &FinGroupoid) -> Option<StructureIso> {
        let a = Structure::of_groupoid(self, vec![vec![]; self.n1()]);
        let b = Structure::of_groupoid(other, vec![vec![]; other.n1()]);
        find_structure_iso(&a, &b)
    }

    pub fn is_isomorphic(&self, other: &FinGroupoid) -> bool {
        self.find_isomorphism(other).is_some()
    }

    pub fn to_data(&self) -> GroupoidData {
        let n = |g: usize| self.g1.name(g).to_string();
        let mut mult: Vec<[String; 3]> = Vec::new();
        for g in 0..self.n1() {
            for h in 0..self.n1() {
                if let Some(k) = self.mul(g, h) {
                    mult.push([n(g), n(h), n(k)]);
                }
            }
        }
        mult.sort();
        let to_map = |v: &[usize], dom: &FinSpace, cod: &FinSpace| -> BTreeMap<String, String> {
            v.iter().enumerate().map(|(i, &j)| (dom.name(i).to_string(), cod.name(j).to_string())).collect()
        };
        GroupoidData {
            g0: self.g0.to_data(),
            g1: self.g1.to_data(),
            r: to_map(&self.r, &self.g1, &self.g0),
            s: to_map(&self.s, &self.g1, &self.g0),
            mult,
            unit: Some(to_map(&self.unit, &self.g0, &self.g1)),
            inv: Some(to_map(&self.inv, &self.g1, &self.g1)),
        }
    }
}

fn map_into_pairs(
    from: &[(usize, usize)],
    to: &[(usize, usize)],
    f: impl Fn((usize, usize)) -> (usize, usize),
) -> Option<Vec<usize>> {
    let pos: HashMap<(usize, usize), usize> = to.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    from.iter().map(|&p| pos.get(&f(p)).copied()).collect()
}

/// JSON form of a groupoid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupoidData {
    pub g0: SpaceData,
    pub g1: SpaceData,
    pub r: BTreeMap<String, String>,
    pub s: BTreeMap<String, String>,
    pub mult: Vec<[String; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inv: Option<BTreeMap<String, String>>,
}

impl GroupoidData {
    pub fn build(&self) -> Result<FinGroupoid, GroupoidError> {
        let g0 = self.g0.build()?;
        let g1 = self.g1.build()?;
        let lookup = |m: &BTreeMap<String, String>, dom: &FinSpace, cod: &FinSpace| -> Result<Vec<usize>, TopError> {
            dom.names().iter().map(|x| cod.point(m.get(x).ok_or_else(|| TopError::Undefined(x.clone()))?)).collect()
        };
        let r = lookup(&self.r, &g1, &g0)?;
        let s = lookup(&self.s, &g1, &g0)?;
        let n = g1.len();
        let mut mult = vec![None; n * n];
        for [a, b, c] in &self.mult {
            let (a, b, c) = (g1.point(a)?, g1.point(b)?, g1.point(c)?);
            if mult[a * n + b].replace(c).is_some() {
                return Err(GroupoidError::Malformed(format!("product ({},{}) given twice", g1.name(a), g1.name(b))));
            }
        }
        let gpd = FinGroupoid::new(g0, g1, r, s, mult)?;
        if let Some(u) = &self.unit {
            if lookup(u, &gpd.g0, &gpd.g1)? != gpd.unit {
                return Err(GroupoidError::UnitInverseDefect(
                    "declared unit map differs from the derived units".into(),
                ));
            }
        }
        if let Some(i) = &self.inv {
            if lookup(i, &gpd.g1, &gpd.g1)? != gpd.inv {
                return Err(GroupoidError::UnitInverseDefect(
                    "declared inversion differs from the derived inverses".into(),
                ));
            }
        }
        Ok(gpd)
    }
}

// ---------------------------------------------------------------------------
// Covering, Čech and linking groupoids.

fn covering_groupoid_raw(x: &FinSpace, z: &FinSpace, f: &[usize]) -> FinGroupoid {
    let _ = z;
    let (arr, pairs) = fiber_product(x, f, x, f);
    let pos: HashMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let n = pairs.len();
    let mut mult = vec![None; n * n];
    for (a, &(x1, x2)) in pairs.iter().enumerate() {
        for (b, &(y1, y2)) in pairs.iter().enumerate() {
            if x2 == y1 {
                mult[a * n + b] = Some(pos[&(x1, y2)]);
            }
        }
    }
    let r = pairs.iter().map(|p| p.0).collect();
    let s = pairs.iter().map(|p| p.1).collect();
    FinGroupoid::new(x.clone(), arr, r, s, mult).expect("covering groupoid of an open surjection is a groupoid")
}

/// Covering groupoid `G(f)` of an open continuous surjection `f: X → Z`;
/// arrows are pairs `(x1,x2)` with `f(x1) = f(x2)`.
pub fn covering_groupoid(f: &fintop::CMap) -> Result<FinGroupoid, GroupoidError> {
    let p = f.predicates();
    if !(p.continuous && p.open && p.surjective) {
        return Err(GroupoidError::NotOpenSurjection);
    }
    let g = covering_groupoid_raw(&f.dom, &f.cod, &f.map);
    debug_assert!(g.predicates().basic);
    Ok(g)
}

/// The canonical map `⊔ U_i → Z` of a family of subsets; points of the
/// disjoint union are named `x@i`.
pub fn cover_map(z: &FinSpace, cover: &[PointSet]) -> Result<fintop::CMap, GroupoidError> {
    for u in cover {
        if !z.is_open(u) {
            return Err(GroupoidError::NotOpen(z.fmt_set(u)));
        }
    }
    let mut covered = z.empty_set();
    for u in cover {
        covered.union_with(u);
    }
    if let Some(x) = (0..z.len()).find(|&x| !covered.contains(x)) {
        return Err(GroupoidError::NotACover(z.name(x).to_string()));
    }
    let subs: Vec<(FinSpace, Vec<usize>)> = cover.iter().map(|u| z.subspace(u)).collect();
    let refs: Vec<&FinSpace> = subs.iter().map(|s| &s.0).collect();
    let (x, origin) = tagged_union(&refs, |i, n| format!("{n}@{i}"));
    let map = origin.iter().map(|&(i, k)| subs[i].1[k]).collect();
    Ok(fintop::CMap::new(x, z.clone(), map)?)
}

/// Čech groupoid of an open cover.
pub fn cech_groupoid(z: &FinSpace, cover: &[PointSet]) -> Result<FinGroupoid, GroupoidError> {
    covering_groupoid(&cover_map(z, cover)?)
}

/// Embedding of a groupoid into the linking groupoid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CornerEmbedding {
    pub objects: Vec<usize>,
    pub arrows: Vec<usize>,
}

/// Linking groupoid of a partial equivalence `X` from `H` to `G`: objects
/// `G⁰ ⊔ H⁰`, arrows `G¹ ⊔ X ⊔ X* ⊔ H¹` with the disjoint-union topology.
pub fn linking_groupoid(
    x: &PartialEquivalence,
    require_global: bool,
) -> Result<(FinGroupoid, CornerEmbedding, CornerEmbedding), GroupoidError> {
    let (g, h) = (x.left(), x.right());
    if require_global && !x.is_global() {
        return Err(GroupoidError::NotGlobalEquivalence);
    }
    let (ng1, nx, nh1) = (g.n1(), x.space().len(), h.n1());
    let tags = ["G", "X", "X*", "H"];
    let (objs, _) = tagged_union(&[g.g0(), h.g0()], |i, n| format!("{n}@{}", ["G", "H"][i]));
    let (arrs, origin) = tagged_union(&[g.g1(), x.space(), x.space(), h.g1()], |i, n| format!("{n}@{}", tags[i]));
    let off = [0, ng1, ng1 + nx, ng1 + 2 * nx];
    let ng0 = g.n0();
    let (mut r, mut s) = (Vec::new(), Vec::new());
    for &(part, k) in &origin {
        let (rr, ss) = match part {
            0 => (g.r()[k], g.s()[k]),
            1 => (x.r()[k], ng0 + x.s()[k]),
            2 => (ng0 + x.s()[k], x.r()[k]),
            _ => (ng0 + h.r()[k], ng0 + h.s()[k]),
        };
        r.push(rr);
        s.push(ss);
    }
    let n = arrs.len();
    let mut mult = vec![None; n * n];
    for a in 0..n {
        for b in 0..n {
            if s[a] != r[b] {
                continue;
            }
            let ((pa, i), (pb, j)) = (origin[a], origin[b]);
            let v = match (pa, pb) {
                (0, 0) => off[0] + g.mul(i, j).unwrap(),
                (0, 1) => off[1] + x.act_left(i, j).unwrap(),
                (1, 3) => off[1] + x.act_right(i, j).unwrap(),
                (3, 3) => off[3] + h.mul(i, j).unwrap(),
                // h·x̄ = (x·h⁻¹)‾ and x̄·g = (g⁻¹·x)‾
                (3, 2) => off[2] + x.act_right(j, h.inverse(i)).unwrap(),
                (2, 0) => off[2] + x.act_left(g.inverse(j), i).unwrap(),
                (1, 2) => off[0] + x.left_pairing(i, j).ok_or(GroupoidError::Malformed("left pairing".into()))?,
                (2, 1) => off[3] + x.right_pairing(i, j).ok_or(GroupoidError::Malformed("right pairing".into()))?,
                _ => unreachable!("composable pair across incompatible corners"),
            };
            mult[a * n + b] = Some(v);
        }
    }
    let lg = FinGroupoid::new(objs, arrs, r, s, mult)?;
    let eg = CornerEmbedding { objects: (0..ng0).collect(), arrows: (0..ng1).collect() };
    let eh = CornerEmbedding { objects: (ng0..ng0 + h.n0()).collect(), arrows: (off[3]..off[3] + nh1).collect() };
    Ok((lg, eg, eh))
}

// ---------------------------------------------------------------------------
// Isomorphism search for groupoid-like structures.

/// A groupoid-shaped structure: objects, elements with range and source,
/// a partial multiplication, and a colour per element that isomorphisms
/// must preserve (gradings, or the index `t` of an action space `X_t`).
#[derive(Debug, Clone)]
pub struct Structure {
    pub obj: FinSpace,
    pub el: FinSpace,
    pub r: Vec<usize>,
    pub s: Vec<usize>,
    pub mult: Vec<Option<usize>>,
    pub colour: Vec<Vec<u32>>,
}

impl Structure {
    pub fn of_groupoid(g: &FinGroupoid, colour: Vec<Vec<u32>>) -> Structure {
        Structure { obj: g.g0.clone(), el: g.g1.clone(), r: g.r.clone(), s: g.s.clone(), mult: g.mult.clone(), colour }
    }

    fn m(&self, a: usize, b: usize) -> Option<usize> {
        self.mult[a * self.el.len() + b]
    }

    fn invariant(&self, a: usize) -> (Vec<u32>, usize, usize, usize, usize, bool) {
        let n = self.el.len();
        let left = (0..n).filter(|&b| self.m(a, b).is_some()).count();
        let right = (0..n).filter(|&b| self.m(b, a).is_some()).count();
        (
            self.colour[a].clone(),
            self.el.nbhd(a).count_ones(..),
            self.el.point_closure(a).count_ones(..),
            left,
            right,
            self.r[a] == self.s[a],
        )
    }
}

/// Bijections on objects and elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureIso {
    pub obj: Vec<usize>,
    pub el: Vec<usize>,
}

/// Exhaustive backtracking search with propagation through products;
/// topology is enforced incrementally on elements and checked on objects
/// once a full assignment is reached.
pub fn find_structure_iso(a: &Structure, b: &Structure) -> Option<StructureIso> {
    let n = a.el.len();
    if n != b.el.len() || a.obj.len() != b.obj.len() {
        return None;
    }
    let inv_a: Vec<_> = (0..n).map(|x| a.invariant(x)).collect();
    let inv_b: Vec<_> = (0..n).map(|x| b.invariant(x)).collect();
    let mut sa = inv_a.clone();
    let mut sb = inv_b.clone();
    sa.sort();
    sb.sort();
    if sa != sb {
        return None;
    }
    let cands: Vec<Vec<usize>> = (0..n).map(|x| (0..n).filter(|&y| inv_a[x] == inv_b[y]).collect()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&x| cands[x].len());

    struct St {
        fwd: Vec<Option<usize>>,
        bwd: Vec<Option<usize>>,
        ofwd: Vec<Option<usize>>,
        obwd: Vec<Option<usize>>,
        trail: Vec<(usize, bool, bool)>,
    }
    fn unassign_to(st: &mut St, mark: usize, a: &Structure) {
        while st.trail.len() > mark {
            let (x, set_r, set_s) = st.trail.pop().unwrap();
            let y = st.fwd[x].take().unwrap();
            st.bwd[y] = None;
            if set_s {
                let o = st.ofwd[a.s[x]].take().unwrap();
                st.obwd[o] = None;
            }
            if set_r {
                let o = st.ofwd[a.r[x]].take().unwrap();
                st.obwd[o] = None;
            }
        }
    }
    fn bind_obj(st: &mut St, oa: usize, ob: usize) -> Option<bool> {
        match (st.ofwd[oa], st.obwd[ob]) {
            (Some(v), _) if v == ob => Some(false),
            (None, None) => {
                st.ofwd[oa] = Some(ob);
                st.obwd[ob] = Some(oa);
                Some(true)
            }
            _ => None,
        }
    }
    fn assign(st: &mut St, a: &Structure, b: &Structure, x0: usize, y0: usize) -> bool {
        let mut queue = vec![(x0, y0)];
        while let Some((x, y)) = queue.pop() {
            match (st.fwd[x], st.bwd[y]) {
                (Some(v), _) if v == y => continue,
                (None, None) => {}
                _ => return false,
            }
            if a.colour[x] != b.colour[y] {
                return false;
            }
            let Some(set_r) = bind_obj(st, a.r[x], b.r[y]) else { return false };
            let set_s = match bind_obj(st, a.s[x], b.s[y]) {
                Some(v) => v,
                None => {
                    if set_r {
                        let o = st.ofwd[a.r[x]].take().unwrap();
                        st.obwd[o] = None;
                    }
                    return false;
                }
            };
            st.fwd[x] = Some(y);
            st.bwd[y] = Some(x);
            st.trail.push((x, set_r, set_s));
            let n = a.el.len();
            for c in 0..n {
                let Some(d) = st.fwd[c] else { continue };
                if a.el.nbhd(x).contains(c) != b.el.nbhd(y).contains(d)
                    || a.el.nbhd(c).contains(x) != b.el.nbhd(d).contains(y)
                {
                    return false;
                }
                for (p, q) in [(a.m(x, c), b.m(y, d)), (a.m(c, x), b.m(d, y))] {
                    match (p, q) {
                        (None, None) => {}
                        (Some(p), Some(q)) => queue.push((p, q)),
                        _ => return false,
                    }
                }
            }
        }
        true
    }
    fn rec(
        st: &mut St,
        a: &Structure,
        b: &Structure,
        order: &[usize],
        k: usize,
        cands: &[Vec<usize>],
    ) -> Option<StructureIso> {
        let mut k = k;
        while k < order.len() && st.fwd[order[k]].is_some() {
            k += 1;
        }
        if k == order.len() {
            let obj: Option<Vec<usize>> = st.ofwd.clone().into_iter().collect();
            let obj = obj?;
            if !is_homeomorphism(&a.obj, &b.obj, &obj) {
                return None;
            }
            let el = st.fwd.iter().map(|v| v.unwrap()).collect();
            return Some(StructureIso { obj, el });
        }
        let x = order[k];
        for &y in &cands[x] {
            if st.bwd[y].is_some() {
                continue;
            }
            let mark = st.trail.len();
            if assign(st, a, b, x, y) {
                if let Some(iso) = rec(st, a, b, order, k + 1, cands) {
                    return Some(iso);
                }
            }
            unassign_to(st, mark, a);
        }
        None
    }
    let mut st = St {
        fwd: vec![None; n],
        bwd: vec![None; n],
        ofwd: vec![None; a.obj.len()],
        obwd: vec![None; a.obj.len()],
        trail: vec![],
    };
    if n == 0 {
        return if a.obj.is_empty() { Some(StructureIso { obj: vec![], el: vec![] }) } else { None };
    }
    rec(&mut st, a, b, &order, 0, &cands)
}

/// Union-find over `0..n`.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    pub fn find(&mut self, x: usize) -> usize {
        let mut x = x;
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
    /// Class label per element (classes numbered by least member) and the
    /// member lists.
    pub fn classes(&mut self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let n = self.parent.len();
        let mut label = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut root_label = HashMap::new();
        for x in 0..n {
            let r = self.find(x);
            let l = *root_label.entry(r).or_insert_with(|| {
                classes.push(vec![]);
                classes.len() - 1
            });
            label[x] = l;
            classes[l].push(x);
        }
        (label, classes)
    }
}

/// Full set helper re-exported for callers building invariant opens.
pub fn all_objects(g: &FinGroupoid) -> PointSet {
    full_set(g.n0())
}

/// Image of a set of arrows under `r`.
pub fn range_of(g: &FinGroupoid, arrows: &PointSet) -> PointSet {
    image(&g.r, g.n0(), arrows)
}

/// Image of a set of arrows under `s`.
pub fn source_of(g: &FinGroupoid, arrows: &PointSet) -> PointSet {
    image(&g.s, g.n0(), arrows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn gm_is_valid_and_etale() {
        let gm = fixtures::gm();
        assert_eq!(gm.n1(), 3);
        assert_eq!(gm.g1().open_count(), 5);
        let p = gm.predicates();
        assert!(p.etale);
        assert!(!p.basic);
        assert!(!p.free);
    }

    #[test]
    fn z4_is_valid() {
        let z4 = FinGroupoid::cyclic(4);
        assert_eq!(z4.inverse(1), 3);
        assert!(z4.predicates().etale);
    }

    #[test]
    fn broken_unit_is_reported() {
        let mut data = fixtures::gm().to_data();
        for row in data.mult.iter_mut() {
            if row[0] == "1c" && row[1] == "g-" {
                row[2] = "1c".into();
            }
        }
        data.unit = None;
        data.inv = None;
        let err = data.build().unwrap_err();
        assert!(matches!(err, GroupoidError::UnitInverseDefect(_)), "{err:?}");
    }

    #[test]
    fn restriction() {
        let gm = fixtures::gm();
        let o = gm.g0().set_of(&["o"]).unwrap();
        let r = gm.restrict(&o).unwrap();
        assert_eq!((r.n0(), r.n1()), (1, 1));
        assert_eq!(gm.restrict(&gm.g0().full_set()).unwrap(), gm);
        let c = gm.g0().set_of(&["c"]).unwrap();
        assert!(matches!(gm.restrict(&c), Err(GroupoidError::NotOpen(_))));
    }

    #[test]
    fn orbit_spaces() {
        let p2 = FinGroupoid::pair(&["a", "b"]);
        assert_eq!(p2.orbit_space().0.len(), 1);
        let gm = fixtures::gm();
        assert_eq!(gm.orbit_space().0, FinSpace::sierpinski());
        let cech = fixtures::cech3();
        let (q, _) = cech.orbit_space();
        assert_eq!(q.len(), 3);
        assert!(q.is_discrete());
    }

    #[test]
    fn covering_and_cech() {
        let cech = fixtures::cech3();
        assert_eq!((cech.n0(), cech.n1()), (4, 6));
        assert!(cech.predicates().basic);

        let z = FinSpace::sierpinski();
        let units = cech_groupoid(&z, &[z.full_set()]).unwrap();
        assert!(units.is_isomorphic(&FinGroupoid::space(&z)));

        let pt = FinSpace::discrete(&["*"]);
        let f = fintop::CMap::new(FinSpace::discrete(&["a", "b"]), pt, vec![0, 0]).unwrap();
        assert!(covering_groupoid(&f).unwrap().is_isomorphic(&FinGroupoid::pair(&["a", "b"])));

        let gm = fixtures::gm();
        let g1 = gm.g1();
        let cover = [g1.set_of(&["1o", "1c"]).unwrap(), g1.set_of(&["1o", "g-"]).unwrap()];
        let c = cech_groupoid(g1, &cover).unwrap();
        assert_eq!((c.n0(), c.n1()), (4, 6));
    }

    #[test]
    fn isomorphism_search_distinguishes() {
        let z4 = FinGroupoid::cyclic(4);
        let v4 = FinGroupoid::group(
            &["e", "a", "b", "c"],
            &[vec![0, 1, 2, 3], vec![1, 0, 3, 2], vec![2, 3, 0, 1], vec![3, 2, 1, 0]],
        )
        .unwrap();
        assert!(!z4.is_isomorphic(&v4));
        assert!(z4.is_isomorphic(&z4));
        let gm = fixtures::gm();
        let discrete_gm = {
            let d = gm.to_data();
            let mut d2 = d.clone();
            d2.g1.opens = None;
            d2.g1.neighbourhoods = Some(d.g1.points.iter().map(|p| (p.clone(), vec![p.clone()])).collect());
            d2.build().unwrap_err()
        };
        // discrete arrows over a non-discrete object space make r non-open
        assert!(matches!(discrete_gm, GroupoidError::RangeSourceNotOpen(_)));
    }
}
