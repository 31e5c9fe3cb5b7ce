//! Finite topological spaces.
//!
//! A finite topology is determined by the minimal open neighbourhood `U_x`
//! of each point: the opens are exactly the sets `W` with `U_x ⊆ W` for all
//! `x ∈ W`.  Every predicate below is phrased in terms of these
//! neighbourhoods, which keeps products and fiber products cheap; the full
//! open-set lattice is enumerated lazily where it is actually needed.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A subset of the points of a [`FinSpace`], indexed by point position.
pub type PointSet = FixedBitSet;

/// Above this many opens, serialization falls back to neighbourhoods.
pub const OPENS_SERIALIZE_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopError {
    #[error("open family lacks the empty set or the full point set")]
    MissingEmptyOrFull,
    #[error("union of {0} and {1} is not open")]
    NotClosedUnderUnion(String, String),
    #[error("intersection of {0} and {1} is not open")]
    NotClosedUnderIntersection(String, String),
    #[error("duplicate point {0}")]
    DuplicatePoint(String),
    #[error("unknown point {0}")]
    UnknownPoint(String),
    #[error("neighbourhood data for {0} is not a valid minimal open neighbourhood")]
    BadNeighbourhood(String),
    #[error("map is not defined at {0}")]
    Undefined(String),
    #[error("map is not continuous at {0}")]
    NotContinuous(String),
    #[error("fiber product over mismatched codomains")]
    InconsistentAnchors,
    #[error("quotient assignment is not surjective onto its labels")]
    NotSurjective,
    #[error("malformed space data: {0}")]
    Malformed(String),
}

/// A finite topological space.
#[derive(Clone, PartialEq, Eq)]
pub struct FinSpace {
    names: Vec<String>,
    index: HashMap<String, usize>,
    nbhd: Vec<PointSet>,
}

impl fmt::Debug for FinSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for i in 0..self.len() {
            m.entry(&self.names[i], &self.set_names(&self.nbhd[i]));
        }
        m.finish()
    }
}

pub fn empty_set(n: usize) -> PointSet {
    FixedBitSet::with_capacity(n)
}

pub fn full_set(n: usize) -> PointSet {
    let mut s = FixedBitSet::with_capacity(n);
    s.insert_range(..);
    s
}

pub fn set_from(n: usize, items: impl IntoIterator<Item = usize>) -> PointSet {
    let mut s = FixedBitSet::with_capacity(n);
    for i in items {
        s.insert(i);
    }
    s
}

fn index_names(names: &[String]) -> Result<HashMap<String, usize>, TopError> {
    let mut index = HashMap::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if index.insert(n.clone(), i).is_some() {
            return Err(TopError::DuplicatePoint(n.clone()));
        }
    }
    Ok(index)
}

impl FinSpace {
    /// Validates an explicit open family (`verify_space`).
    pub fn from_opens<S: AsRef<str>>(points: &[S], opens: &[Vec<S>]) -> Result<FinSpace, TopError> {
        let names: Vec<String> = points.iter().map(|p| p.as_ref().to_string()).collect();
        let index = index_names(&names)?;
        let n = names.len();
        let mut family: Vec<PointSet> = Vec::with_capacity(opens.len());
        for o in opens {
            let mut s = empty_set(n);
            for p in o {
                let i = *index.get(p.as_ref()).ok_or_else(|| TopError::UnknownPoint(p.as_ref().to_string()))?;
                s.insert(i);
            }
            if !family.contains(&s) {
                family.push(s);
            }
        }
        if !family.contains(&empty_set(n)) || !family.contains(&full_set(n)) {
            return Err(TopError::MissingEmptyOrFull);
        }
        let fmt = |s: &PointSet| fmt_set(&names, s);
        for a in 0..family.len() {
            for b in (a + 1)..family.len() {
                let mut u = family[a].clone();
                u.union_with(&family[b]);
                if !family.contains(&u) {
                    return Err(TopError::NotClosedUnderUnion(fmt(&family[a]), fmt(&family[b])));
                }
                let mut m = family[a].clone();
                m.intersect_with(&family[b]);
                if !family.contains(&m) {
                    return Err(TopError::NotClosedUnderIntersection(fmt(&family[a]), fmt(&family[b])));
                }
            }
        }
        let nbhd = (0..n)
            .map(|x| {
                let mut u = full_set(n);
                for o in family.iter().filter(|o| o.contains(x)) {
                    u.intersect_with(o);
                }
                u
            })
            .collect();
        Ok(FinSpace { names, index, nbhd })
    }

    /// Builds a space from minimal open neighbourhoods, checking that they
    /// are reflexive and transitive.
    pub fn from_neighbourhoods(names: Vec<String>, nbhd: Vec<PointSet>) -> Result<FinSpace, TopError> {
        let index = index_names(&names)?;
        let n = names.len();
        if nbhd.len() != n {
            return Err(TopError::Malformed("neighbourhood count differs from point count".into()));
        }
        let mut nb = Vec::with_capacity(n);
        for (x, u) in nbhd.into_iter().enumerate() {
            let mut u2 = u;
            u2.grow(n);
            if u2.len() != n {
                return Err(TopError::BadNeighbourhood(names[x].clone()));
            }
            nb.push(u2);
        }
        for x in 0..n {
            if !nb[x].contains(x) || nb[x].ones().any(|y| !nb[y].is_subset(&nb[x])) {
                return Err(TopError::BadNeighbourhood(names[x].clone()));
            }
        }
        Ok(FinSpace { names, index, nbhd: nb })
    }

    /// The topology whose opens are the up-sets of a preorder given by
    /// generating relations `x ≤ y`.
    pub fn from_preorder<S: AsRef<str>>(points: &[S], leq: &[(S, S)]) -> Result<FinSpace, TopError> {
        let names: Vec<String> = points.iter().map(|p| p.as_ref().to_string()).collect();
        let index = index_names(&names)?;
        let n = names.len();
        let mut up: Vec<PointSet> = (0..n).map(|i| set_from(n, [i])).collect();
        for (a, b) in leq {
            let ia = *index.get(a.as_ref()).ok_or_else(|| TopError::UnknownPoint(a.as_ref().into()))?;
            let ib = *index.get(b.as_ref()).ok_or_else(|| TopError::UnknownPoint(b.as_ref().into()))?;
            up[ia].insert(ib);
        }
        // transitive closure
        loop {
            let mut changed = false;
            for x in 0..n {
                let mut acc = up[x].clone();
                for y in up[x].ones() {
                    acc.union_with(&up[y]);
                }
                if acc != up[x] {
                    up[x] = acc;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(FinSpace { names, index, nbhd: up })
    }

    pub fn discrete<S: AsRef<str>>(points: &[S]) -> FinSpace {
        let names: Vec<String> = points.iter().map(|p| p.as_ref().to_string()).collect();
        let n = names.len();
        let index = index_names(&names).expect("discrete space with duplicate points");
        let nbhd = (0..n).map(|i| set_from(n, [i])).collect();
        FinSpace { names, index, nbhd }
    }

    pub fn indiscrete<S: AsRef<str>>(points: &[S]) -> FinSpace {
        let names: Vec<String> = points.iter().map(|p| p.as_ref().to_string()).collect();
        let n = names.len();
        let index = index_names(&names).expect("indiscrete space with duplicate points");
        FinSpace { names, index, nbhd: vec![full_set(n); n] }
    }

    pub fn empty() -> FinSpace {
        FinSpace { names: vec![], index: HashMap::new(), nbhd: vec![] }
    }

    /// The Sierpiński space `{c, o}` with `{o}` open.
    pub fn sierpinski() -> FinSpace {
        FinSpace::from_preorder(&["c", "o"], &[("c", "o")]).unwrap()
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

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn point(&self, name: &str) -> Result<usize, TopError> {
        self.index_of(name).ok_or_else(|| TopError::UnknownPoint(name.to_string()))
    }

    /// Minimal open neighbourhood of `x`.
    pub fn nbhd(&self, x: usize) -> &PointSet {
        &self.nbhd[x]
    }

    pub fn set_of<S: AsRef<str>>(&self, names: &[S]) -> Result<PointSet, TopError> {
        let mut s = empty_set(self.len());
        for n in names {
            s.insert(self.point(n.as_ref())?);
        }
        Ok(s)
    }

    pub fn set_names(&self, s: &PointSet) -> Vec<String> {
        s.ones().map(|i| self.names[i].clone()).collect()
    }

    pub fn fmt_set(&self, s: &PointSet) -> String {
        fmt_set(&self.names, s)
    }

    pub fn empty_set(&self) -> PointSet {
        empty_set(self.len())
    }

    pub fn full_set(&self) -> PointSet {
        full_set(self.len())
    }

    pub fn is_open(&self, s: &PointSet) -> bool {
        s.ones().all(|x| self.nbhd[x].is_subset(s))
    }

    pub fn is_closed(&self, s: &PointSet) -> bool {
        let mut c = self.full_set();
        c.difference_with(s);
        self.is_open(&c)
    }

    /// Smallest open set containing `s`.
    pub fn open_hull(&self, s: &PointSet) -> PointSet {
        let mut u = self.empty_set();
        for x in s.ones() {
            u.union_with(&self.nbhd[x]);
        }
        u
    }

    pub fn interior(&self, s: &PointSet) -> PointSet {
        set_from(self.len(), s.ones().filter(|&x| self.nbhd[x].is_subset(s)))
    }

    pub fn closure(&self, s: &PointSet) -> PointSet {
        set_from(self.len(), (0..self.len()).filter(|&x| !self.nbhd[x].is_disjoint(s)))
    }

    pub fn point_closure(&self, x: usize) -> PointSet {
        set_from(self.len(), (0..self.len()).filter(|&y| self.nbhd[y].contains(x)))
    }

    /// `s` is open in its closure.
    pub fn is_locally_closed(&self, s: &PointSet) -> bool {
        let cl = self.closure(s);
        s.ones().all(|x| {
            let mut t = self.nbhd[x].clone();
            t.intersect_with(&cl);
            t.is_subset(s)
        })
    }

    pub fn is_discrete(&self) -> bool {
        (0..self.len()).all(|x| self.nbhd[x].count_ones(..) == 1)
    }

    pub fn is_t0(&self) -> bool {
        (0..self.len()).all(|x| (x + 1..self.len()).all(|y| !(self.nbhd[x].contains(y) && self.nbhd[y].contains(x))))
    }

    /// Pairwise separation by disjoint opens.
    pub fn is_hausdorff(&self) -> bool {
        (0..self.len()).all(|x| (x + 1..self.len()).all(|y| self.nbhd[x].is_disjoint(&self.nbhd[y])))
    }

    /// Every point has a Hausdorff open neighbourhood, tested directly on
    /// the minimal neighbourhoods.
    pub fn is_locally_hausdorff_direct(&self) -> bool {
        (0..self.len()).all(|x| {
            let u: Vec<usize> = self.nbhd[x].ones().collect();
            u.iter().enumerate().all(|(k, &y)| u[k + 1..].iter().all(|&z| self.nbhd[y].is_disjoint(&self.nbhd[z])))
        })
    }

    /// Diagonal criterion: the diagonal is locally closed in `X × X`.
    pub fn is_locally_hausdorff(&self) -> bool {
        let (sq, pairs) = product(self, self);
        let diag = set_from(sq.len(), pairs.iter().enumerate().filter(|(_, (a, b))| a == b).map(|(i, _)| i));
        sq.is_locally_closed(&diag)
    }

    /// All open subsets, each visited exactly once.
    pub fn for_each_open(&self, mut f: impl FnMut(&PointSet) -> bool) {
        let n = self.len();
        let down: Vec<PointSet> = (0..n).map(|x| self.point_closure(x)).collect();
        fn rec(
            sp: &FinSpace,
            down: &[PointSet],
            i: usize,
            inn: &mut PointSet,
            out: &mut PointSet,
            f: &mut dyn FnMut(&PointSet) -> bool,
        ) -> bool {
            let n = sp.len();
            let mut i = i;
            while i < n && (inn.contains(i) || out.contains(i)) {
                i += 1;
            }
            if i == n {
                return f(inn);
            }
            let (si, so) = (inn.clone(), out.clone());
            if sp.nbhd[i].is_disjoint(out) {
                inn.union_with(&sp.nbhd[i]);
                if !rec(sp, down, i + 1, inn, out, f) {
                    return false;
                }
                *inn = si.clone();
            }
            if down[i].is_disjoint(inn) {
                out.union_with(&down[i]);
                if !rec(sp, down, i + 1, inn, out, f) {
                    return false;
                }
                *out = so;
            }
            *inn = si;
            true
        }
        let mut inn = self.empty_set();
        let mut out = self.empty_set();
        rec(self, &down, 0, &mut inn, &mut out, &mut f);
    }

    /// All opens, or `None` if there are more than `cap`.
    pub fn opens_capped(&self, cap: usize) -> Option<Vec<PointSet>> {
        let mut v = Vec::new();
        let mut over = false;
        self.for_each_open(|s| {
            if v.len() >= cap {
                over = true;
                return false;
            }
            v.push(s.clone());
            true
        });
        if over {
            None
        } else {
            Some(v)
        }
    }

    pub fn opens(&self) -> Vec<PointSet> {
        let mut v = Vec::new();
        self.for_each_open(|s| {
            v.push(s.clone());
            true
        });
        v
    }

    pub fn open_count(&self) -> usize {
        let mut k = 0;
        self.for_each_open(|_| {
            k += 1;
            true
        });
        k
    }

    /// Subspace topology on `s`; returns the inclusion as point indices.
    pub fn subspace(&self, s: &PointSet) -> (FinSpace, Vec<usize>) {
        let incl: Vec<usize> = s.ones().collect();
        let pos: HashMap<usize, usize> = incl.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        let names = incl.iter().map(|&x| self.names[x].clone()).collect::<Vec<_>>();
        let m = incl.len();
        let nbhd =
            incl.iter().map(|&x| set_from(m, self.nbhd[x].ones().filter_map(|y| pos.get(&y).copied()))).collect();
        let index = index_names(&names).unwrap();
        (FinSpace { names, index, nbhd }, incl)
    }

    /// Quotient by a surjective labelling `labels: points → 0..k`, with
    /// class names supplied; installs the quotient topology.
    pub fn quotient(&self, labels: &[usize], class_names: Vec<String>) -> Result<FinSpace, TopError> {
        let k = class_names.len();
        if labels.len() != self.len() {
            return Err(TopError::Malformed("label count differs from point count".into()));
        }
        let mut members: Vec<Vec<usize>> = vec![vec![]; k];
        for (x, &c) in labels.iter().enumerate() {
            if c >= k {
                return Err(TopError::NotSurjective);
            }
            members[c].push(x);
        }
        if members.iter().any(|m| m.is_empty()) {
            return Err(TopError::NotSurjective);
        }
        let mut nbhd = Vec::with_capacity(k);
        for y in 0..k {
            let mut v = set_from(k, [y]);
            loop {
                let mut w = set_from(k, []);
                for c in v.ones() {
                    for &x in &members[c] {
                        for z in self.nbhd[x].ones() {
                            w.insert(labels[z]);
                        }
                    }
                }
                w.union_with(&v);
                if w == v {
                    break;
                }
                v = w;
            }
            nbhd.push(v);
        }
        FinSpace::from_neighbourhoods(class_names, nbhd)
    }
}

pub fn fmt_set(names: &[String], s: &PointSet) -> String {
    let mut v: Vec<&str> = s.ones().map(|i| names[i].as_str()).collect();
    v.sort();
    format!("{{{}}}", v.join(","))
}

/// Product space with points named `(x,y)`; also returns the coordinates.
pub fn product(a: &FinSpace, b: &FinSpace) -> (FinSpace, Vec<(usize, usize)>) {
    let pairs: Vec<(usize, usize)> = (0..a.len()).flat_map(|x| (0..b.len()).map(move |y| (x, y))).collect();
    pair_space(a, b, pairs)
}

/// The subspace `{(x,y) : f(x) = g(y)}` of `a × b`.
pub fn fiber_product(a: &FinSpace, f: &[usize], b: &FinSpace, g: &[usize]) -> (FinSpace, Vec<(usize, usize)>) {
    let pairs: Vec<(usize, usize)> =
        (0..a.len()).flat_map(|x| (0..b.len()).filter(move |&y| f[x] == g[y]).map(move |y| (x, y))).collect();
    pair_space(a, b, pairs)
}

/// The subspace of `a × b` on the given pairs.
pub fn pair_space(a: &FinSpace, b: &FinSpace, pairs: Vec<(usize, usize)>) -> (FinSpace, Vec<(usize, usize)>) {
    let nb = b.len();
    let pos: HashMap<usize, usize> = pairs.iter().enumerate().map(|(k, &(x, y))| (x * nb + y, k)).collect();
    let m = pairs.len();
    let nbhd = pairs
        .iter()
        .map(|&(x, y)| {
            let mut s = set_from(m, []);
            for x2 in a.nbhd(x).ones() {
                for y2 in b.nbhd(y).ones() {
                    if let Some(&k) = pos.get(&(x2 * nb + y2)) {
                        s.insert(k);
                    }
                }
            }
            s
        })
        .collect();
    let names: Vec<String> = pairs.iter().map(|&(x, y)| format!("({},{})", a.name(x), b.name(y))).collect();
    let index = index_names(&names).unwrap_or_else(|_| {
        // Ambiguous parenthesised names can only arise from pathological
        // point names; fall back to positional names.
        HashMap::new()
    });
    if index.len() != names.len() {
        let names: Vec<String> = (0..m).map(|k| format!("p{k}")).collect();
        let index = index_names(&names).unwrap();
        return (FinSpace { names, index, nbhd }, pairs);
    }
    (FinSpace { names, index, nbhd }, pairs)
}

/// Disjoint union; points are named `x@i` for the `i`-th summand.  Returns
/// `(summand, point)` for each point of the union.
pub fn disjoint_union(parts: &[&FinSpace]) -> (FinSpace, Vec<(usize, usize)>) {
    tagged_union(parts, |i, x| format!("{x}@{i}"))
}

/// Disjoint union with caller-chosen point names.
pub fn tagged_union(parts: &[&FinSpace], name: impl Fn(usize, &str) -> String) -> (FinSpace, Vec<(usize, usize)>) {
    let mut names = Vec::new();
    let mut origin = Vec::new();
    let mut offset = Vec::new();
    let mut total = 0;
    for (i, p) in parts.iter().enumerate() {
        offset.push(total);
        total += p.len();
        for x in 0..p.len() {
            names.push(name(i, p.name(x)));
            origin.push((i, x));
        }
    }
    let nbhd = origin.iter().map(|&(i, x)| set_from(total, parts[i].nbhd(x).ones().map(|y| offset[i] + y))).collect();
    let index = index_names(&names).expect("disjoint union produced duplicate point names");
    (FinSpace { names, index, nbhd }, origin)
}

// ---------------------------------------------------------------------------
// Maps given as index assignments `dom → cod`.

pub fn image(map: &[usize], cod_len: usize, s: &PointSet) -> PointSet {
    set_from(cod_len, s.ones().map(|x| map[x]))
}

pub fn preimage(map: &[usize], dom_len: usize, t: &PointSet) -> PointSet {
    set_from(dom_len, (0..dom_len).filter(|&x| t.contains(map[x])))
}

pub fn is_continuous(dom: &FinSpace, cod: &FinSpace, map: &[usize]) -> bool {
    first_discontinuity(dom, cod, map).is_none()
}

pub fn first_discontinuity(dom: &FinSpace, cod: &FinSpace, map: &[usize]) -> Option<usize> {
    (0..dom.len()).find(|&x| dom.nbhd(x).ones().any(|y| !cod.nbhd(map[x]).contains(map[y])))
}

pub fn is_open_map(dom: &FinSpace, cod: &FinSpace, map: &[usize]) -> bool {
    (0..dom.len()).all(|x| cod.is_open(&image(map, cod.len(), dom.nbhd(x))))
}

pub fn is_closed_map(dom: &FinSpace, cod: &FinSpace, map: &[usize]) -> bool {
    (0..dom.len()).all(|x| cod.is_closed(&image(map, cod.len(), &dom.point_closure(x))))
}

pub fn is_surjective(cod_len: usize, map: &[usize]) -> bool {
    let mut hit = vec![false; cod_len];
    for &y in map {
        hit[y] = true;
    }
    hit.into_iter().all(|h| h)
}

pub fn is_injective(map: &[usize]) -> bool {
    let mut v = map.to_vec();
    v.sort_unstable();
    v.windows(2).all(|w| w[0] != w[1])
}

/// Local homeomorphism: each `U_x` maps injectively onto an open set and
/// `f(U_y) = U_{f(y)}` for `y ∈ U_x`.
pub fn is_etale(dom: &FinSpace, cod: &FinSpace, map: &[usize]) -> bool {
    (0..dom.len()).all(|x| {
        let u: Vec<usize> = dom.nbhd(x).ones().collect();
        is_injective(&u.iter().map(|&y| map[y]).collect::<Vec<_>>())
            && u.iter().all(|&y| image(map, cod.len(), dom.nbhd(y)) == *cod.nbhd(map[y]))
    })
}

/// Bijective, continuous, and open.
pub fn is_homeomorphism(dom: &FinSpace, cod: &FinSpace, map: &[usize]) -> bool {
    dom.len() == cod.len()
        && is_injective(map)
        && (0..dom.len()).all(|x| image(map, cod.len(), dom.nbhd(x)) == *cod.nbhd(map[x]))
}

/// Injective and a homeomorphism onto its image with the subspace topology.
pub fn is_embedding(dom: &FinSpace, cod: &FinSpace, map: &[usize]) -> bool {
    is_injective(map)
        && (0..dom.len()).all(|x| {
            let img = image(map, cod.len(), &full_set(dom.len()));
            let mut t = cod.nbhd(map[x]).clone();
            t.intersect_with(&img);
            image(map, cod.len(), dom.nbhd(x)) == t
        })
}

/// A continuous map between finite spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CMap {
    pub dom: FinSpace,
    pub cod: FinSpace,
    pub map: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapPredicates {
    pub continuous: bool,
    pub open: bool,
    pub closed: bool,
    pub proper: bool,
    pub surjective: bool,
    pub etale: bool,
}

impl CMap {
    pub fn new(dom: FinSpace, cod: FinSpace, map: Vec<usize>) -> Result<CMap, TopError> {
        if map.len() != dom.len() {
            return Err(TopError::Malformed("assignment length differs from domain size".into()));
        }
        if map.iter().any(|&y| y >= cod.len()) {
            return Err(TopError::Malformed("assignment leaves the codomain".into()));
        }
        if let Some(x) = first_discontinuity(&dom, &cod, &map) {
            return Err(TopError::NotContinuous(dom.name(x).to_string()));
        }
        Ok(CMap { dom, cod, map })
    }

    pub fn from_names(dom: FinSpace, cod: FinSpace, assign: &BTreeMap<String, String>) -> Result<CMap, TopError> {
        let mut map = Vec::with_capacity(dom.len());
        for x in dom.names() {
            let y = assign.get(x).ok_or_else(|| TopError::Undefined(x.clone()))?;
            map.push(cod.point(y)?);
        }
        CMap::new(dom, cod, map)
    }

    pub fn identity(space: FinSpace) -> CMap {
        let map = (0..space.len()).collect();
        CMap { dom: space.clone(), cod: space, map }
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    /// Proper coincides with closed because every finite set is quasi-compact.
    pub fn predicates(&self) -> MapPredicates {
        let closed = is_closed_map(&self.dom, &self.cod, &self.map);
        MapPredicates {
            continuous: is_continuous(&self.dom, &self.cod, &self.map),
            open: is_open_map(&self.dom, &self.cod, &self.map),
            closed,
            proper: closed,
            surjective: is_surjective(self.cod.len(), &self.map),
            etale: is_etale(&self.dom, &self.cod, &self.map),
        }
    }

    pub fn to_names(&self) -> BTreeMap<String, String> {
        (0..self.dom.len()).map(|x| (self.dom.name(x).to_string(), self.cod.name(self.map[x]).to_string())).collect()
    }
}

pub fn map_predicates(f: &CMap) -> MapPredicates {
    f.predicates()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HausdorffPredicates {
    pub hausdorff: bool,
    pub locally_hausdorff: bool,
    pub locally_closed: Option<bool>,
    pub t0: bool,
}

pub fn hausdorff_predicates(x: &FinSpace, s: Option<&PointSet>) -> HausdorffPredicates {
    HausdorffPredicates {
        hausdorff: x.is_hausdorff(),
        locally_hausdorff: x.is_locally_hausdorff(),
        locally_closed: s.map(|s| x.is_locally_closed(s)),
        t0: x.is_t0(),
    }
}

/// Fiber product of two maps into a common codomain.
pub fn fiber_product_maps(f: &CMap, g: &CMap) -> Result<(FinSpace, Vec<(usize, usize)>), TopError> {
    if f.cod != g.cod {
        return Err(TopError::InconsistentAnchors);
    }
    Ok(fiber_product(&f.dom, &f.map, &g.dom, &g.map))
}

// ---------------------------------------------------------------------------
// Serialization.

/// JSON form of a space.  Input accepts `opens` or `neighbourhoods`;
/// canonical output lists opens when there are at most
/// [`OPENS_SERIALIZE_CAP`] of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceData {
    pub points: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opens: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbourhoods: Option<BTreeMap<String, Vec<String>>>,
}

impl SpaceData {
    pub fn build(&self) -> Result<FinSpace, TopError> {
        match (&self.opens, &self.neighbourhoods) {
            (Some(o), _) => FinSpace::from_opens(&self.points, o),
            (None, Some(nb)) => {
                let idx = index_names(&self.points)?;
                let n = self.points.len();
                let mut sets = Vec::with_capacity(n);
                for p in &self.points {
                    let u = nb.get(p).ok_or_else(|| TopError::Undefined(p.clone()))?;
                    let mut s = empty_set(n);
                    for q in u {
                        s.insert(*idx.get(q).ok_or_else(|| TopError::UnknownPoint(q.clone()))?);
                    }
                    sets.push(s);
                }
                FinSpace::from_neighbourhoods(self.points.clone(), sets)
            }
            (None, None) => Err(TopError::Malformed("space needs `opens` or `neighbourhoods`".into())),
        }
    }
}

impl FinSpace {
    pub fn to_data(&self) -> SpaceData {
        let mut points = self.names.clone();
        points.sort();
        let sorted = |s: &PointSet| {
            let mut v = self.set_names(s);
            v.sort();
            v
        };
        match self.opens_capped(OPENS_SERIALIZE_CAP) {
            Some(opens) => {
                let mut o: Vec<Vec<String>> = opens.iter().map(sorted).collect();
                o.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
                SpaceData { points, opens: Some(o), neighbourhoods: None }
            }
            None => SpaceData {
                points,
                opens: None,
                neighbourhoods: Some((0..self.len()).map(|x| (self.names[x].clone(), sorted(&self.nbhd[x]))).collect()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d2() -> FinSpace {
        FinSpace::discrete(&["a", "b"])
    }

    #[test]
    fn sierpinski_from_opens() {
        let s = FinSpace::from_opens(&["c", "o"], &[vec![], vec!["o"], vec!["c", "o"]]).unwrap();
        assert_eq!(s, FinSpace::sierpinski());
        assert_eq!(s.open_count(), 3);
    }

    #[test]
    fn missing_full_set_rejected() {
        let r = FinSpace::from_opens(&["a", "b"], &[vec![], vec!["a"], vec!["b"]]);
        assert_eq!(r.unwrap_err(), TopError::MissingEmptyOrFull);
    }

    #[test]
    fn union_defect_has_witness() {
        let r = FinSpace::from_opens(&["a", "b", "c"], &[vec![], vec!["a"], vec!["b"], vec!["a", "b", "c"]]);
        assert_eq!(r.unwrap_err(), TopError::NotClosedUnderUnion("{a}".into(), "{b}".into()));
    }

    #[test]
    fn map_flags() {
        let pt = FinSpace::discrete(&["*"]);
        let c = CMap::new(d2(), pt, vec![0, 0]).unwrap();
        let p = c.predicates();
        assert!(p.open && p.closed && p.proper && p.surjective);
        // each point of D2 is an open neighbourhood mapped onto the point
        assert!(p.etale);

        let sig = FinSpace::sierpinski();
        let o = FinSpace::discrete(&["o"]);
        let inc = CMap::new(o, sig.clone(), vec![sig.point("o").unwrap()]).unwrap();
        let p = inc.predicates();
        assert!(p.open && p.etale && !p.proper && !p.closed);

        let p = CMap::identity(sig).predicates();
        assert!(p.continuous && p.open && p.closed && p.proper && p.surjective && p.etale);
    }

    #[test]
    fn discontinuous_map_rejected() {
        let sig = FinSpace::sierpinski();
        // swapping c and o is not continuous
        let r = CMap::new(sig.clone(), sig, vec![1, 0]);
        assert!(matches!(r, Err(TopError::NotContinuous(_))));
    }

    #[test]
    fn hausdorff_flags() {
        let h = hausdorff_predicates(&d2(), None);
        assert!(h.hausdorff && h.locally_hausdorff);
        let sig = FinSpace::sierpinski();
        let c = sig.set_of(&["c"]).unwrap();
        let h = hausdorff_predicates(&sig, Some(&c));
        assert!(!h.hausdorff && !h.locally_hausdorff);
        assert_eq!(h.locally_closed, Some(true));
    }

    #[test]
    fn constructions() {
        let sig = FinSpace::sierpinski();
        let (p, _) = product(&sig, &sig);
        assert_eq!(p.len(), 4);
        // up-sets of the product of two 2-chains
        assert_eq!(p.open_count(), 6);

        let q = d2().quotient(&[0, 0], vec!["*".into()]).unwrap();
        assert_eq!(q.len(), 1);

        let z = FinSpace::discrete(&["a", "b", "c"]);
        let (u, origin) = disjoint_union(&[
            &z.subspace(&z.set_of(&["a", "b"]).unwrap()).0,
            &z.subspace(&z.set_of(&["b", "c"]).unwrap()).0,
        ]);
        let f: Vec<usize> =
            origin.iter().map(|&(i, x)| z.point(if i == 0 { ["a", "b"][x] } else { ["b", "c"][x] }).unwrap()).collect();
        let (fp, _) = fiber_product(&u, &f, &u, &f);
        assert_eq!(fp.len(), 6);
    }

    #[test]
    fn quotient_topology_of_sierpinski_collapse() {
        // Collapsing the chain c < o < t onto {c,o} by t ↦ o
        let x = FinSpace::from_preorder(&["c", "o", "t"], &[("c", "o"), ("o", "t")]).unwrap();
        let q = x.quotient(&[0, 1, 1], vec!["c".into(), "o".into()]).unwrap();
        assert_eq!(q, FinSpace::sierpinski());
    }

    #[test]
    fn serialization_round_trip() {
        let sig = FinSpace::sierpinski();
        let d = sig.to_data();
        assert_eq!(d.opens.as_ref().unwrap().len(), 3);
        let back = d.build().unwrap();
        assert_eq!(back.open_count(), 3);
        assert!(back.is_open(&back.set_of(&["o"]).unwrap()));
    }
}
