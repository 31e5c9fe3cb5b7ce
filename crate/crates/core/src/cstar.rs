//! Exact finite-dimensional *-algebras over the Gaussian rationals.
//!
//! Everything here treats groupoids as discrete: the groupoid algebra is
//! the convolution algebra on arrows, realized by the left regular
//! representation.  Fell bundles over inverse semigroups are families of
//! matrix subspaces of a common ambient algebra.  All arithmetic is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{ActionError, SActionOnSpace, SGradedGroupoid};
use crate::fintop::{FinSpace, PointSet};
use crate::groupoid::FinGroupoid;
use crate::isg::{InvSemigroup, SemigroupData};

/// Gaussian rational `a/b + (c/d)i`.
pub type Scalar = Complex<BigRational>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CstarError {
    #[error("cannot parse scalar {0:?}")]
    Parse(String),
    #[error("malformed algebra data: {0}")]
    Malformed(String),
    #[error("basis is linearly dependent")]
    NotIndependent,
    #[error("subspace is not closed: {0}")]
    NotClosed(String),
    #[error("algebra is not semisimple (degenerate trace form)")]
    NotSemisimple,
    #[error("blocks do not split over the Gaussian rationals: {0}")]
    NotSplit(String),
    #[error("fibres are not saturated at ({0},{1})")]
    SaturationFailure(String, String),
    #[error("fibre product B_{0}·B_{1} is not contained in B_{0}{1}")]
    ProductNotContained(String, String),
    #[error("B_{0}* ≠ B_{0}*")]
    NotInvolutive(String),
    #[error("B_{0} is not contained in B_{1} although {0} ≤ {1}")]
    InclusionFailure(String, String),
    #[error("positivity fails: {0}")]
    PositivityFailure(String),
    #[error("fibre {0} lies outside the ambient algebra")]
    OutsideAmbient(String),
    #[error("not a partial bijection of blocks: {0}")]
    NotPartialBijection(String),
    #[error("map on open sets is not meet-preserving at ({0},{1})")]
    NotMeetPreserving(String, String),
    #[error(transparent)]
    Action(#[from] ActionError),
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Scalar {
    Complex::new(rat(n, 1), BigRational::zero())
}

/// `i`.
pub fn imag_unit() -> Scalar {
    Complex::new(BigRational::zero(), BigRational::one())
}

fn real(q: BigRational) -> Scalar {
    Complex::new(q, BigRational::zero())
}

/// Canonical text form: `a/b`, `c/d i` or `a/b+c/d i`.
pub fn fmt_scalar(x: &Scalar) -> String {
    if x.im.is_zero() {
        return x.re.to_string();
    }
    if x.re.is_zero() {
        return format!("{} i", x.im);
    }
    let sign = if x.im.is_negative() { '-' } else { '+' };
    format!("{}{}{} i", x.re, sign, x.im.abs())
}

pub fn parse_scalar(s: &str) -> Result<Scalar, CstarError> {
    let err = || CstarError::Parse(s.to_string());
    let q = |t: &str| BigRational::from_str(t.trim()).map_err(|_| err());
    let t = s.trim();
    let Some(body) = t.strip_suffix('i') else {
        return Ok(real(q(t)?));
    };
    let body = body.trim_end();
    let split = body.char_indices().rev().find(|&(k, c)| k > 0 && (c == '+' || c == '-')).map(|(k, _)| k);
    let im_of = |t: &str| match t.trim() {
        "" | "+" => Ok(BigRational::one()),
        "-" => Ok(-BigRational::one()),
        v => q(v.strip_prefix('+').unwrap_or(v)),
    };
    match split {
        Some(k) => Ok(Complex::new(q(&body[..k])?, im_of(&body[k..])?)),
        None => Ok(Complex::new(BigRational::zero(), im_of(body)?)),
    }
}

// ---------------------------------------------------------------------------
// Matrices.

/// A square matrix over [`Scalar`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    n: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zero(n: usize) -> Matrix {
        Matrix { n, data: vec![Scalar::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zero(n);
        for i in 0..n {
            m.data[i * n + i] = Scalar::one();
        }
        m
    }

    /// The matrix unit `E_{ij}`.
    pub fn unit(n: usize, i: usize, j: usize) -> Matrix {
        let mut m = Matrix::zero(n);
        m.data[i * n + j] = Scalar::one();
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Scalar) -> Matrix {
        Matrix { n, data: (0..n * n).map(|k| f(k / n, k % n)).collect() }
    }

    pub fn from_ints(rows: &[&[i64]]) -> Matrix {
        let n = rows.len();
        Matrix::from_fn(n, |i, j| int(rows[i][j]))
    }

    pub fn from_entries(n: usize, data: Vec<Scalar>) -> Result<Matrix, CstarError> {
        if data.len() != n * n {
            return Err(CstarError::Malformed(format!("{} entries for a {n}×{n} matrix", data.len())));
        }
        Ok(Matrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.n + j]
    }
    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn mul(&self, o: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &o.data[k * n + j];
                    if !b.is_zero() {
                        out.data[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Matrix) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Matrix) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: &Scalar) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().map(|a| a * c).collect() }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn trace(&self) -> Scalar {
        (0..self.n).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn block_diag(parts: &[Matrix]) -> Matrix {
        let n = parts.iter().map(|p| p.n).sum();
        let mut m = Matrix::zero(n);
        let mut off = 0;
        for p in parts {
            for i in 0..p.n {
                for j in 0..p.n {
                    m.data[(off + i) * n + off + j] = p.get(i, j).clone();
                }
            }
            off += p.n;
        }
        m
    }

    /// Kronecker product `a ⊗ b`.
    pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
        let n = a.n * b.n;
        Matrix::from_fn(n, |i, j| a.get(i / b.n, j / b.n) * b.get(i % b.n, j % b.n))
    }

    pub fn is_hermitian(&self) -> bool {
        *self == self.adjoint()
    }

    /// Exact positive-semidefiniteness by pivoted LDL* elimination.
    pub fn is_psd(&self) -> bool {
        if !self.is_hermitian() {
            return false;
        }
        let mut h = self.clone();
        let n = self.n;
        let mut alive: Vec<usize> = (0..n).collect();
        while !alive.is_empty() {
            let mut pivot = None;
            for &i in &alive {
                let d = &h.get(i, i).re;
                if d.is_negative() {
                    return false;
                }
                if d.is_positive() && pivot.is_none() {
                    pivot = Some(i);
                }
            }
            let Some(p) = pivot else {
                // all remaining diagonal entries vanish: so must the block
                return alive.iter().all(|&i| alive.iter().all(|&j| h.get(i, j).is_zero()));
            };
            let d = h.get(p, p).re.clone();
            alive.retain(|&i| i != p);
            for &i in &alive {
                for &j in &alive {
                    let corr = h.get(i, p) * h.get(p, j) / real(d.clone());
                    h.data[i * n + j] -= corr;
                }
            }
        }
        true
    }

    pub fn to_data(&self) -> Vec<Vec<String>> {
        (0..self.n).map(|i| (0..self.n).map(|j| fmt_scalar(self.get(i, j))).collect()).collect()
    }

    pub fn from_data(rows: &[Vec<String>]) -> Result<Matrix, CstarError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(CstarError::Malformed("matrix is not square".into()));
        }
        let data = rows.iter().flatten().map(|s| parse_scalar(s)).collect::<Result<_, _>>()?;
        Ok(Matrix { n, data })
    }
}

// ---------------------------------------------------------------------------
// Linear algebra.

fn axpy(v: &mut [Scalar], c: &Scalar, w: &[Scalar]) {
    for (a, b) in v.iter_mut().zip(w) {
        if !b.is_zero() {
            *a -= c * b;
        }
    }
}

/// A subspace in reduced row echelon form; each row remembers its
/// expression in the inserted generators.
#[derive(Debug, Clone)]
pub struct Span {
    len: usize,
    aug: usize,
    rows: Vec<(usize, Vec<Scalar>, Vec<Scalar>)>,
}

impl Span {
    pub fn new(len: usize) -> Span {
        Span { len, aug: 0, rows: Vec::new() }
    }

    /// A span whose rows track coefficients of `aug` generators.
    pub fn with_tracking(len: usize, aug: usize) -> Span {
        Span { len, aug, rows: Vec::new() }
    }

    fn reduce(&self, v: &mut [Scalar], a: &mut [Scalar]) {
        for (p, row, arow) in &self.rows {
            if v[*p].is_zero() {
                continue;
            }
            let c = v[*p].clone();
            axpy(v, &c, row);
            if !a.is_empty() {
                axpy(a, &c, arow);
            }
        }
    }

    /// Inserts generator number `k` (when tracking).  Returns the
    /// dependency among generators if `v` was already in the span.
    pub fn insert_tracked(&mut self, mut v: Vec<Scalar>, k: Option<usize>) -> Option<Vec<Scalar>> {
        let mut a = vec![Scalar::zero(); self.aug];
        if let Some(k) = k {
            a[k] = Scalar::one();
        }
        self.reduce(&mut v, &mut a);
        let Some(p) = v.iter().position(|x| !x.is_zero()) else {
            return Some(a);
        };
        let inv = Scalar::one() / v[p].clone();
        for x in v.iter_mut().chain(a.iter_mut()) {
            *x = &*x * &inv;
        }
        for (_, row, arow) in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let c = row[p].clone();
                axpy(row, &c, &v);
                axpy(arow, &c, &a);
            }
        }
        self.rows.push((p, v, a));
        None
    }

    /// Adds `v`; returns whether the dimension grew.
    pub fn insert(&mut self, v: Vec<Scalar>) -> bool {
        self.insert_tracked(v, None).is_none()
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Length of the ambient vectors.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn contains(&self, v: &[Scalar]) -> bool {
        let mut v = v.to_vec();
        self.reduce(&mut v, &mut []);
        v.iter().all(Zero::is_zero)
    }

    /// Coefficients of `v` in the tracked generators, if `v` lies in the span.
    pub fn coords(&self, v: &[Scalar]) -> Option<Vec<Scalar>> {
        let mut v = v.to_vec();
        let mut a = vec![Scalar::zero(); self.aug];
        self.reduce(&mut v, &mut a);
        v.iter().all(Zero::is_zero).then(|| a.into_iter().map(|x| -x).collect())
    }

    /// `v` modulo the span.
    pub fn remainder(&self, v: &[Scalar]) -> Vec<Scalar> {
        let mut v = v.to_vec();
        self.reduce(&mut v, &mut []);
        v
    }

    pub fn pivots(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self.rows.iter().map(|r| r.0).collect();
        p.sort_unstable();
        p
    }

    pub fn basis(&self) -> Vec<Vec<Scalar>> {
        self.rows.iter().map(|r| r.1.clone()).collect()
    }

    pub fn is_subspace_of(&self, other: &Span) -> bool {
        self.rows.iter().all(|r| other.contains(&r.1))
    }

    pub fn same_as(&self, other: &Span) -> bool {
        self.dim() == other.dim() && self.is_subspace_of(other)
    }
}

/// Kernel basis of the linear map sending the `k`-th unit vector to
/// `images[k]`, plus its rank.
pub fn kernel(images: &[Vec<Scalar>], target_len: usize) -> (Vec<Vec<Scalar>>, usize) {
    let mut sp = Span::with_tracking(target_len, images.len());
    let mut ker = Vec::new();
    for (k, w) in images.iter().enumerate() {
        if let Some(dep) = sp.insert_tracked(w.clone(), Some(k)) {
            ker.push(dep);
        }
    }
    (ker, sp.dim())
}

fn span_of(len: usize, vs: impl IntoIterator<Item = Vec<Scalar>>) -> Span {
    let mut s = Span::new(len);
    for v in vs {
        s.insert(v);
    }
    s
}

/// Basis of `U ∩ V`.
pub fn intersection(u: &[Vec<Scalar>], v: &[Vec<Scalar>], len: usize) -> Vec<Vec<Scalar>> {
    let mut sp = Span::with_tracking(len, u.len() + v.len());
    let mut out = Span::new(len);
    for (k, w) in u.iter().chain(v).enumerate() {
        if let Some(dep) = sp.insert_tracked(w.clone(), Some(k)) {
            let mut x = vec![Scalar::zero(); len];
            for (i, ui) in u.iter().enumerate() {
                if !dep[i].is_zero() {
                    axpy(&mut x, &-dep[i].clone(), ui);
                }
            }
            out.insert(x);
        }
    }
    out.basis()
}

// ---------------------------------------------------------------------------
// Subspaces of matrices.

/// A linear subspace of `M_n`.
#[derive(Debug, Clone)]
pub struct MatSpace {
    n: usize,
    basis: Vec<Matrix>,
    span: Span,
}

impl PartialEq for MatSpace {
    fn eq(&self, other: &MatSpace) -> bool {
        self.n == other.n && self.span.same_as(&other.span)
    }
}

impl MatSpace {
    /// The span of `gens`; the basis keeps the independent generators in order.
    pub fn new(n: usize, gens: impl IntoIterator<Item = Matrix>) -> MatSpace {
        let mut span = Span::new(n * n);
        let mut basis = Vec::new();
        for g in gens {
            if span.insert(g.data.clone()) {
                basis.push(g);
            }
        }
        MatSpace { n, basis, span }
    }

    pub fn zero(n: usize) -> MatSpace {
        MatSpace::new(n, [])
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }
    pub fn contains(&self, m: &Matrix) -> bool {
        self.span.contains(&m.data)
    }
    pub fn is_subspace_of(&self, o: &MatSpace) -> bool {
        self.span.is_subspace_of(&o.span)
    }

    /// `span{x·y : x ∈ self, y ∈ other}`.
    pub fn product(&self, o: &MatSpace) -> MatSpace {
        MatSpace::new(self.n, self.basis.iter().flat_map(|x| o.basis.iter().map(move |y| x.mul(y))))
    }

    pub fn adjoint(&self) -> MatSpace {
        MatSpace::new(self.n, self.basis.iter().map(Matrix::adjoint))
    }

    pub fn sum(&self, o: &MatSpace) -> MatSpace {
        MatSpace::new(self.n, self.basis.iter().chain(&o.basis).cloned())
    }

    pub fn intersect(&self, o: &MatSpace) -> MatSpace {
        let u: Vec<Vec<Scalar>> = self.basis.iter().map(|m| m.data.clone()).collect();
        let v: Vec<Vec<Scalar>> = o.basis.iter().map(|m| m.data.clone()).collect();
        let n = self.n;
        MatSpace::new(n, intersection(&u, &v, n * n).into_iter().map(|d| Matrix { n, data: d }))
    }

    /// Left multiplication by a single matrix.
    pub fn left_mul(&self, m: &Matrix) -> MatSpace {
        MatSpace::new(self.n, self.basis.iter().map(|x| m.mul(x)))
    }

    pub fn right_mul(&self, m: &Matrix) -> MatSpace {
        MatSpace::new(self.n, self.basis.iter().map(|x| x.mul(m)))
    }

    pub fn is_star_closed(&self) -> bool {
        self.basis.iter().all(|x| self.contains(&x.adjoint()))
    }

    pub fn is_subalgebra(&self) -> bool {
        self.product(self).is_subspace_of(self)
    }
}

// ---------------------------------------------------------------------------
// Abstract algebras from structure constants.

/// A finite-dimensional *-algebra given by structure constants on a basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Algebra {
    dim: usize,
    mult: Vec<Vec<Scalar>>,
    star: Vec<Vec<Scalar>>,
}

fn unit_vec(n: usize, k: usize) -> Vec<Scalar> {
    let mut v = vec![Scalar::zero(); n];
    v[k] = Scalar::one();
    v
}

fn is_square(k: usize) -> Option<usize> {
    let r = (k as f64).sqrt().round() as usize;
    (r * r == k).then_some(r)
}

impl Algebra {
    pub fn new(dim: usize, mult: Vec<Vec<Scalar>>, star: Vec<Vec<Scalar>>) -> Algebra {
        Algebra { dim, mult, star }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mul(&self, x: &[Scalar], y: &[Scalar]) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(); self.dim];
        for (i, a) in x.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
            for (j, b) in y.iter().enumerate().filter(|(_, b)| !b.is_zero()) {
                let ab = a * b;
                for (o, c) in out.iter_mut().zip(&self.mult[i * self.dim + j]) {
                    if !c.is_zero() {
                        *o += &ab * c;
                    }
                }
            }
        }
        out
    }

    pub fn star_of(&self, x: &[Scalar]) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(); self.dim];
        for (i, a) in x.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
            let ac = a.conj();
            for (o, c) in out.iter_mut().zip(&self.star[i]) {
                *o += &ac * c;
            }
        }
        out
    }

    /// Associativity and the involution laws on basis elements.
    pub fn check_laws(&self) -> Result<(), CstarError> {
        let d = self.dim;
        for i in 0..d {
            let ei = unit_vec(d, i);
            if self.star_of(&self.star_of(&ei)) != ei {
                return Err(CstarError::NotClosed(format!("x** ≠ x at basis element {i}")));
            }
            for j in 0..d {
                let ej = unit_vec(d, j);
                let lhs = self.star_of(&self.mul(&ei, &ej));
                if lhs != self.mul(&self.star_of(&ej), &self.star_of(&ei)) {
                    return Err(CstarError::NotClosed(format!("(xy)* ≠ y*x* at ({i},{j})")));
                }
                for k in 0..d {
                    let ek = unit_vec(d, k);
                    if self.mul(&self.mul(&ei, &ej), &ek) != self.mul(&ei, &self.mul(&ej, &ek)) {
                        return Err(CstarError::NotClosed(format!("not associative at ({i},{j},{k})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Nondegeneracy of `(x, y) ↦ tr(L_{xy})`.
    pub fn is_semisimple(&self) -> bool {
        let d = self.dim;
        let tr: Vec<Scalar> = (0..d).map(|k| (0..d).map(|i| self.mult[k * d + i][i].clone()).sum()).collect();
        let gram: Vec<Vec<Scalar>> = (0..d)
            .map(|i| (0..d).map(|j| self.mult[i * d + j].iter().zip(&tr).map(|(a, b)| a * b).sum()).collect())
            .collect();
        span_of(d, gram).dim() == d
    }

    pub fn unit(&self) -> Option<Vec<Scalar>> {
        let d = self.dim;
        let images: Vec<Vec<Scalar>> = (0..d)
            .map(|k| (0..d).flat_map(|i| self.mult[k * d + i].iter().chain(&self.mult[i * d + k]).cloned()).collect())
            .collect();
        let rhs: Vec<Scalar> = (0..d).flat_map(|i| unit_vec(d, i).into_iter().chain(unit_vec(d, i))).collect();
        let mut sp = Span::with_tracking(2 * d * d, d);
        for (k, w) in images.into_iter().enumerate() {
            sp.insert_tracked(w, Some(k));
        }
        sp.coords(&rhs)
    }

    /// Basis of the centre.
    pub fn centre(&self) -> Vec<Vec<Scalar>> {
        let d = self.dim;
        let images: Vec<Vec<Scalar>> = (0..d)
            .map(|k| {
                (0..d)
                    .flat_map(|i| self.mult[k * d + i].iter().zip(&self.mult[i * d + k]).map(|(a, b)| a - b))
                    .collect()
            })
            .collect();
        kernel(&images, d * d).0
    }

    /// Central primitive idempotents, split over `ℚ(i)`.
    pub fn central_idempotents(&self) -> Result<Vec<Vec<Scalar>>, CstarError> {
        if !self.is_semisimple() {
            return Err(CstarError::NotSemisimple);
        }
        if self.dim == 0 {
            return Ok(vec![]);
        }
        let one = self.unit().ok_or(CstarError::NotSemisimple)?;
        let mut idems = vec![one];
        for z in self.centre() {
            let zs = self.star_of(&z);
            let re: Vec<Scalar> = z.iter().zip(&zs).map(|(a, b)| a + b).collect();
            let i = imag_unit();
            let im: Vec<Scalar> = z.iter().zip(&zs).map(|(a, b)| (a - b) * &i).collect();
            for h in [re, im] {
                let mut next = Vec::new();
                for e in &idems {
                    next.extend(self.split(e, &self.mul(&h, e))?);
                }
                idems = next;
            }
        }
        Ok(idems)
    }

    /// Splits the central idempotent `e` along the eigenvalues of the
    /// self-adjoint central element `x ∈ eA`.
    fn split(&self, e: &[Scalar], x: &[Scalar]) -> Result<Vec<Vec<Scalar>>, CstarError> {
        let d = self.dim;
        let mut sp = Span::with_tracking(d, d + 1);
        let mut powers = vec![e.to_vec()];
        let poly = loop {
            let k = powers.len() - 1;
            if let Some(dep) = sp.insert_tracked(powers[k].clone(), Some(k)) {
                break dep[..=k].to_vec();
            }
            let next = self.mul(&powers[k], x);
            powers.push(next);
        };
        let lead = poly.last().unwrap().clone();
        let monic: Vec<Scalar> = poly.iter().map(|c| c / &lead).collect();
        if monic.iter().any(|c| !c.im.is_zero()) {
            return Err(CstarError::NotSplit("non-real eigenvalue of a self-adjoint element".into()));
        }
        let coeffs: Vec<BigRational> = monic.into_iter().map(|c| c.re).collect();
        let roots = rational_roots(&coeffs);
        if roots.len() != coeffs.len() - 1 {
            return Err(CstarError::NotSplit("irrational eigenvalue of a central element".into()));
        }
        if roots.len() == 1 {
            return Ok(vec![e.to_vec()]);
        }
        Ok(roots
            .iter()
            .map(|lam| {
                let mut f = e.to_vec();
                for mu in roots.iter().filter(|mu| *mu != lam) {
                    let c = real(BigRational::one() / (lam - mu));
                    let shifted: Vec<Scalar> = x.iter().zip(e).map(|(a, b)| (a - b * real(mu.clone())) * &c).collect();
                    f = self.mul(&f, &shifted);
                }
                f
            })
            .collect())
    }

    /// Sorted block sizes of the Wedderburn decomposition.
    pub fn blocks(&self) -> Result<Vec<usize>, CstarError> {
        let mut sizes = Vec::new();
        for f in self.central_idempotents()? {
            let dim = span_of(self.dim, (0..self.dim).map(|i| self.mul(&f, &unit_vec(self.dim, i)))).dim();
            sizes.push(is_square(dim).ok_or_else(|| CstarError::NotSplit(format!("block of dimension {dim}")))?);
        }
        sizes.sort_unstable();
        Ok(sizes)
    }
}

/// JSON form of an abstract algebra: `mult[i][j]` holds the coordinates
/// of `b_i·b_j`, `star[i]` those of `b_i*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureData {
    pub dim: usize,
    pub mult: Vec<Vec<Vec<String>>>,
    pub star: Vec<Vec<String>>,
}

impl Algebra {
    pub fn to_data(&self) -> StructureData {
        let d = self.dim;
        let row = |v: &Vec<Scalar>| v.iter().map(fmt_scalar).collect::<Vec<_>>();
        StructureData {
            dim: d,
            mult: (0..d).map(|i| (0..d).map(|j| row(&self.mult[i * d + j])).collect()).collect(),
            star: self.star.iter().map(row).collect(),
        }
    }
}

impl StructureData {
    /// Parses and checks associativity and the involution laws.
    pub fn build(&self) -> Result<Algebra, CstarError> {
        let d = self.dim;
        let parse_row = |v: &Vec<String>| -> Result<Vec<Scalar>, CstarError> {
            if v.len() != d {
                return Err(CstarError::Malformed("coordinate vector of the wrong length".into()));
            }
            v.iter().map(|x| parse_scalar(x)).collect()
        };
        if self.mult.len() != d || self.mult.iter().any(|r| r.len() != d) || self.star.len() != d {
            return Err(CstarError::Malformed("structure constants have the wrong shape".into()));
        }
        let mult = self.mult.iter().flatten().map(parse_row).collect::<Result<Vec<_>, _>>()?;
        let star = self.star.iter().map(parse_row).collect::<Result<Vec<_>, _>>()?;
        let a = Algebra::new(d, mult, star);
        a.check_laws()?;
        Ok(a)
    }
}

/// Distinct rational roots of a monic polynomial (coefficients from the
/// constant term up).
fn rational_roots(coeffs: &[BigRational]) -> Vec<BigRational> {
    let deg = coeffs.len() - 1;
    let mut c: Vec<BigRational> = coeffs.to_vec();
    let mut roots = Vec::new();
    // strip zero roots
    let zeros = c.iter().take_while(|x| x.is_zero()).count();
    if zeros > 0 {
        roots.push(BigRational::zero());
        c.drain(..zeros);
    }
    let den = c.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    // y = den·x is a root of a monic integer polynomial
    let k = c.len() - 1;
    let ints: Vec<BigInt> = (0..=k)
        .map(|j| {
            let v = &c[j] * BigRational::from_integer(num_traits::pow(den.clone(), k - j));
            v.to_integer()
        })
        .collect();
    let c0 = ints[0].abs();
    let bound = ints.iter().map(|v| v.abs()).max().unwrap_or_default() + BigInt::one();
    let eval = |y: &BigInt| -> bool {
        let mut acc = BigInt::zero();
        for v in ints.iter().rev() {
            acc = acc * y + v;
        }
        acc.is_zero()
    };
    let mut d = BigInt::one();
    while &d * &d <= c0 && d <= bound {
        if (&c0 % &d).is_zero() {
            for cand in [d.clone(), &c0 / &d] {
                for y in [cand.clone(), -cand] {
                    let x = BigRational::new(y.clone(), den.clone());
                    if y.abs() <= bound && !roots.contains(&x) && eval(&y) {
                        roots.push(x);
                    }
                }
            }
        }
        d += 1;
    }
    roots.truncate(deg);
    roots.sort();
    roots
}

// ---------------------------------------------------------------------------
// Concrete *-algebras of matrices.

/// A *-subalgebra of `M_n` with a distinguished basis.
#[derive(Debug, Clone)]
pub struct StarAlgebra {
    space: MatSpace,
    labels: Vec<String>,
    alg: Algebra,
}

impl StarAlgebra {
    /// Verifies independence and closure under products and adjoints.
    pub fn new(n: usize, basis: Vec<Matrix>, labels: Vec<String>) -> Result<StarAlgebra, CstarError> {
        if basis.iter().any(|m| m.n != n) || labels.len() != basis.len() {
            return Err(CstarError::Malformed("basis matrices and labels disagree".into()));
        }
        let mut span = Span::with_tracking(n * n, basis.len());
        for (k, b) in basis.iter().enumerate() {
            if span.insert_tracked(b.data.clone(), Some(k)).is_some() {
                return Err(CstarError::NotIndependent);
            }
        }
        let coords =
            |m: &Matrix, what: &str| span.coords(&m.data).ok_or_else(|| CstarError::NotClosed(what.to_string()));
        let mut mult = Vec::with_capacity(basis.len() * basis.len());
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                mult.push(coords(&a.mul(b), &format!("{}·{}", labels[i], labels[j]))?);
            }
        }
        let star = basis
            .iter()
            .enumerate()
            .map(|(i, a)| coords(&a.adjoint(), &format!("{}*", labels[i])))
            .collect::<Result<Vec<_>, _>>()?;
        let alg = Algebra::new(basis.len(), mult, star);
        let space = MatSpace { n, basis, span };
        Ok(StarAlgebra { space, labels, alg })
    }

    /// The *-algebra generated by `gens`.
    pub fn generated(n: usize, gens: Vec<Matrix>) -> Result<StarAlgebra, CstarError> {
        let mut sp = MatSpace::new(n, gens.iter().flat_map(|g| [g.clone(), g.adjoint()]));
        loop {
            let next = sp.sum(&sp.product(&sp));
            if next.dim() == sp.dim() {
                break;
            }
            sp = next;
        }
        let labels = (0..sp.dim()).map(|k| format!("b{k}")).collect();
        StarAlgebra::new(n, sp.basis, labels)
    }

    /// All of `M_n`.
    pub fn full(n: usize) -> StarAlgebra {
        let basis: Vec<Matrix> = (0..n * n).map(|k| Matrix::unit(n, k / n, k % n)).collect();
        let labels = (0..n * n).map(|k| format!("E{}{}", k / n, k % n)).collect();
        StarAlgebra::new(n, basis, labels).expect("matrix units span M_n")
    }

    pub fn size(&self) -> usize {
        self.space.n
    }
    pub fn dim(&self) -> usize {
        self.space.dim()
    }
    pub fn basis(&self) -> &[Matrix] {
        self.space.basis()
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn space(&self) -> &MatSpace {
        &self.space
    }
    pub fn algebra(&self) -> &Algebra {
        &self.alg
    }
    pub fn contains(&self, m: &Matrix) -> bool {
        self.space.contains(m)
    }

    pub fn to_matrix(&self, coords: &[Scalar]) -> Matrix {
        let mut m = Matrix::zero(self.size());
        for (c, b) in coords.iter().zip(self.basis()) {
            if !c.is_zero() {
                m = m.add(&b.scale(c));
            }
        }
        m
    }

    pub fn is_semisimple(&self) -> bool {
        self.alg.is_semisimple()
    }

    pub fn blocks(&self) -> Result<Vec<usize>, CstarError> {
        self.alg.blocks()
    }

    /// Central primitive idempotents as matrices, ordered as found.
    pub fn central_projections(&self) -> Result<Vec<Matrix>, CstarError> {
        Ok(self.alg.central_idempotents()?.iter().map(|c| self.to_matrix(c)).collect())
    }

    pub fn to_data(&self) -> AlgebraData {
        AlgebraData {
            size: self.size(),
            labels: self.labels.clone(),
            basis: self.basis().iter().map(Matrix::to_data).collect(),
        }
    }
}

/// JSON form of a matrix algebra; scalars are strings like `"1/2+3/4 i"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraData {
    pub size: usize,
    pub labels: Vec<String>,
    pub basis: Vec<Vec<Vec<String>>>,
}

impl AlgebraData {
    pub fn build(&self) -> Result<StarAlgebra, CstarError> {
        let basis = self.basis.iter().map(|m| Matrix::from_data(m)).collect::<Result<Vec<_>, _>>()?;
        StarAlgebra::new(self.size, basis, self.labels.clone())
    }
}

/// Convolution algebra of a finite groupoid (topology forgotten) in its
/// left regular representation, with basis `δ_g`.
pub fn groupoid_algebra(l: &FinGroupoid) -> StarAlgebra {
    let n = l.n1();
    let basis = (0..n).map(|g| delta(l, g)).collect();
    StarAlgebra::new(n, basis, l.g1().names().to_vec()).expect("regular representation is faithful")
}

fn delta(l: &FinGroupoid, g: usize) -> Matrix {
    let n = l.n1();
    let mut m = Matrix::zero(n);
    for h in 0..n {
        if let Some(gh) = l.mul(g, h) {
            m.data[gh * n + h] = Scalar::one();
        }
    }
    m
}

/// The commutative algebra `ℂ^k` of diagonal matrices.
pub fn diagonal_algebra(k: usize) -> StarAlgebra {
    let basis = (0..k).map(|i| Matrix::unit(k, i, i)).collect();
    StarAlgebra::new(k, basis, (0..k).map(|i| format!("p{i}")).collect()).expect("diagonal units")
}

/// Equal numbers of blocks.
pub fn morita_equivalent(a: &StarAlgebra, b: &StarAlgebra) -> Result<bool, CstarError> {
    Ok(a.blocks()?.len() == b.blocks()?.len())
}

// ---------------------------------------------------------------------------
// Ideals and the primitive ideal space.

/// Blocks of a split semisimple algebra as a discrete space.
#[derive(Debug, Clone)]
pub struct Prim {
    pub space: FinSpace,
    pub projections: Vec<Matrix>,
    pub sizes: Vec<usize>,
    algebra: StarAlgebra,
}

impl Prim {
    /// The ideal `⊕_{j∈U} p_j A`.
    pub fn ideal(&self, set: &PointSet) -> MatSpace {
        let n = self.algebra.size();
        MatSpace::new(n, set.ones().flat_map(|j| self.algebra.basis().iter().map(move |b| self.projections[j].mul(b))))
    }

    /// All ideals, one per open subset.
    pub fn ideals(&self) -> Vec<MatSpace> {
        self.space.opens().iter().map(|u| self.ideal(u)).collect()
    }
}

pub fn ideal_and_prim(a: &StarAlgebra) -> Result<Prim, CstarError> {
    let projections = a.central_projections()?;
    let sizes = projections
        .iter()
        .map(|p| {
            let d = a.space().left_mul(p).dim();
            is_square(d).ok_or_else(|| CstarError::NotSplit(format!("block of dimension {d}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let names: Vec<String> = (0..projections.len()).map(|j| format!("P{j}")).collect();
    Ok(Prim { space: FinSpace::discrete(&names), projections, sizes, algebra: a.clone() })
}

/// Checks that `m: Open(X) → subspaces` preserves finite meets and joins.
/// Returns the first pair whose join is not preserved.
pub fn suprema_check(x: &FinSpace, m: impl Fn(&PointSet) -> MatSpace) -> Result<Option<(String, String)>, CstarError> {
    let opens = x.opens();
    let images: Vec<MatSpace> = opens.iter().map(&m).collect();
    let find = |s: &PointSet| opens.iter().position(|o| o == s).unwrap();
    for (i, u) in opens.iter().enumerate() {
        for (j, v) in opens.iter().enumerate().skip(i) {
            let mut meet = u.clone();
            meet.intersect_with(v);
            if images[find(&meet)] != images[i].intersect(&images[j]) {
                return Err(CstarError::NotMeetPreserving(x.fmt_set(u), x.fmt_set(v)));
            }
        }
    }
    if let Some(e) = opens.iter().position(|o| o.is_clear()) {
        if images[e].dim() != 0 {
            return Ok(Some(("∅".into(), "∅".into())));
        }
    }
    for (i, u) in opens.iter().enumerate() {
        for (j, v) in opens.iter().enumerate().skip(i) {
            let mut join = u.clone();
            join.union_with(v);
            if images[find(&join)] != images[i].sum(&images[j]) {
                return Ok(Some((x.fmt_set(u), x.fmt_set(v))));
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Fell bundles over inverse semigroups.

/// Fibres `B_t ⊆ B` indexed by an inverse semigroup with unit.
#[derive(Debug, Clone)]
pub struct FellBundle {
    s: InvSemigroup,
    ambient: StarAlgebra,
    fibres: Vec<MatSpace>,
    saturated: bool,
}

/// Outcome of a family of pointwise checks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl CheckReport {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(msg());
        }
    }
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Kernel of the sum map `⊕_t B_t → B`.
#[derive(Debug, Clone)]
pub struct EKernel {
    pub dim: usize,
    pub basis: Vec<Vec<Scalar>>,
    /// Whether `ι_t(b) − ι_u(b)` for `t ≤ u` span the kernel.
    pub spanned_by_relations: bool,
}

/// The section algebra `⊕_t B_t / ⟨ι_t(b) − ι_u(b)⟩`.
#[derive(Debug, Clone)]
pub struct SectionAlgebra {
    pub algebra: Algebra,
    pub relations: usize,
    pub unit_fibre_injective: bool,
    /// Wedderburn block sizes; `None` when they do not split over `ℚ(i)`.
    pub blocks: Option<Vec<usize>>,
}

impl FellBundle {
    /// Verifies a saturated bundle.
    pub fn new(s: InvSemigroup, ambient: StarAlgebra, fibres: Vec<Vec<Matrix>>) -> Result<FellBundle, CstarError> {
        FellBundle::build(s, ambient, fibres, true)
    }

    /// Allows `B_t·B_u ⊊ B_{tu}`.
    pub fn new_unsaturated(
        s: InvSemigroup,
        ambient: StarAlgebra,
        fibres: Vec<Vec<Matrix>>,
    ) -> Result<FellBundle, CstarError> {
        FellBundle::build(s, ambient, fibres, false)
    }

    fn build(
        s: InvSemigroup,
        ambient: StarAlgebra,
        fibres: Vec<Vec<Matrix>>,
        strict: bool,
    ) -> Result<FellBundle, CstarError> {
        let n = ambient.size();
        let one = s.unit().ok_or(CstarError::Action(ActionError::NoUnit))?;
        if fibres.len() != s.len() {
            return Err(CstarError::Malformed("one fibre per element required".into()));
        }
        let fibres: Vec<MatSpace> = fibres.into_iter().map(|f| MatSpace::new(n, f)).collect();
        for (t, f) in fibres.iter().enumerate() {
            if !f.is_subspace_of(ambient.space()) {
                return Err(CstarError::OutsideAmbient(s.name(t).into()));
            }
        }
        if !fibres[one].is_subalgebra() || !fibres[one].is_star_closed() {
            return Err(CstarError::NotClosed(format!("unit fibre B_{}", s.name(one))));
        }
        let mut saturated = true;
        for t in 0..s.len() {
            for u in 0..s.len() {
                let p = fibres[t].product(&fibres[u]);
                let target = &fibres[s.mul(t, u)];
                if !p.is_subspace_of(target) {
                    return Err(CstarError::ProductNotContained(s.name(t).into(), s.name(u).into()));
                }
                if p.dim() != target.dim() {
                    saturated = false;
                    if strict {
                        return Err(CstarError::SaturationFailure(s.name(t).into(), s.name(u).into()));
                    }
                }
            }
        }
        for t in 0..s.len() {
            if fibres[t].adjoint() != fibres[s.star(t)] {
                return Err(CstarError::NotInvolutive(s.name(t).into()));
            }
            for u in (0..s.len()).filter(|&u| s.leq(t, u)) {
                if !fibres[t].is_subspace_of(&fibres[u]) {
                    return Err(CstarError::InclusionFailure(s.name(t).into(), s.name(u).into()));
                }
            }
            for x in fibres[t].basis() {
                if !x.adjoint().mul(x).is_psd() {
                    return Err(CstarError::PositivityFailure(format!("x*x for a basis vector of B_{}", s.name(t))));
                }
            }
        }
        Ok(FellBundle { s, ambient, fibres, saturated })
    }

    pub fn semigroup(&self) -> &InvSemigroup {
        &self.s
    }
    pub fn ambient(&self) -> &StarAlgebra {
        &self.ambient
    }
    pub fn fibre(&self, t: usize) -> &MatSpace {
        &self.fibres[t]
    }
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }
    pub fn dims(&self) -> Vec<usize> {
        self.fibres.iter().map(MatSpace::dim).collect()
    }
    /// Whether `B₀ = 0` for a zero element (vacuous without one).
    pub fn zero_fibre_vanishes(&self) -> bool {
        self.s.zero().is_none_or(|z| self.fibres[z].dim() == 0)
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.fibres.len());
        let mut acc = 0;
        for f in &self.fibres {
            off.push(acc);
            acc += f.dim();
        }
        off
    }

    /// Coordinates of `ι_t(b)` in `⊕ B_t`.
    fn iota(&self, t: usize, b: &Matrix, off: &[usize], total: usize) -> Vec<Scalar> {
        let mut sp = Span::with_tracking(b.n * b.n, self.fibres[t].dim());
        for (k, x) in self.fibres[t].basis().iter().enumerate() {
            sp.insert_tracked(x.data.clone(), Some(k));
        }
        let c = sp.coords(&b.data).expect("element of the fibre");
        let mut v = vec![Scalar::zero(); total];
        for (k, x) in c.into_iter().enumerate() {
            v[off[t] + k] = x;
        }
        v
    }

    fn relations(&self, off: &[usize], total: usize) -> Vec<Vec<Scalar>> {
        let s = &self.s;
        let mut rel = Vec::new();
        for t in 0..s.len() {
            for u in (0..s.len()).filter(|&u| u != t && s.leq(t, u)) {
                for b in self.fibres[t].basis() {
                    let a = self.iota(t, b, off, total);
                    let c = self.iota(u, b, off, total);
                    rel.push(a.iter().zip(&c).map(|(x, y)| x - y).collect());
                }
            }
        }
        rel
    }

    fn total_basis(&self) -> Vec<(usize, &Matrix)> {
        self.fibres.iter().enumerate().flat_map(|(t, f)| f.basis().iter().map(move |b| (t, b))).collect()
    }

    pub fn e_map_kernel(&self) -> EKernel {
        let off = self.offsets();
        let all = self.total_basis();
        let total = all.len();
        let n = self.ambient.size();
        let images: Vec<Vec<Scalar>> = all.iter().map(|(_, b)| b.data.clone()).collect();
        let (basis, _) = kernel(&images, n * n);
        let rel = span_of(total, self.relations(&off, total));
        let ker = span_of(total, basis.clone());
        EKernel { dim: basis.len(), spanned_by_relations: rel.same_as(&ker), basis }
    }

    pub fn section_algebra(&self) -> Result<SectionAlgebra, CstarError> {
        let off = self.offsets();
        let all = self.total_basis();
        let total = all.len();
        let rel = span_of(total, self.relations(&off, total));
        let pivots = rel.pivots();
        let free: Vec<usize> = (0..total).filter(|k| !pivots.contains(k)).collect();
        let quot = |v: &[Scalar]| -> Vec<Scalar> {
            let r = rel.remainder(v);
            free.iter().map(|&k| r[k].clone()).collect()
        };
        let prod = |i: usize, j: usize| -> Vec<Scalar> {
            let ((t, a), (u, b)) = (all[i], all[j]);
            self.iota(self.s.mul(t, u), &a.mul(b), &off, total)
        };
        // the relations span an ideal
        for r in rel.basis() {
            for j in 0..total {
                let mut left = vec![Scalar::zero(); total];
                let mut right = vec![Scalar::zero(); total];
                for (i, c) in r.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
                    for (l, x) in prod(i, j).into_iter().enumerate() {
                        left[l] += c * x;
                    }
                    for (l, x) in prod(j, i).into_iter().enumerate() {
                        right[l] += c * x;
                    }
                }
                if !rel.contains(&left) || !rel.contains(&right) {
                    return Err(CstarError::NotClosed("relations do not form an ideal".into()));
                }
            }
        }
        let d = free.len();
        let mut mult = Vec::with_capacity(d * d);
        for &i in &free {
            for &j in &free {
                mult.push(quot(&prod(i, j)));
            }
        }
        let star = free
            .iter()
            .map(|&i| {
                let (t, a) = all[i];
                quot(&self.iota(self.s.star(t), &a.adjoint(), &off, total))
            })
            .collect();
        let algebra = Algebra::new(d, mult, star);
        if !algebra.is_semisimple() {
            return Err(CstarError::NotSemisimple);
        }
        let one = self.s.unit().unwrap();
        let unit_images = self.fibres[one].basis().iter().map(|b| quot(&self.iota(one, b, &off, total)));
        let unit_fibre_injective = span_of(d, unit_images).dim() == self.fibres[one].dim();
        let blocks = match algebra.blocks() {
            Ok(b) => Some(b),
            Err(CstarError::NotSplit(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(SectionAlgebra { algebra, relations: rel.dim(), unit_fibre_injective, blocks })
    }

    /// The partial bijections of `Prim(B₁)` induced by the fibres.
    pub fn prim_action(&self) -> Result<(Prim, SActionOnSpace), CstarError> {
        let one = self.s.unit().unwrap();
        let a = StarAlgebra::new(
            self.ambient.size(),
            self.fibres[one].basis().to_vec(),
            (0..self.fibres[one].dim()).map(|k| format!("a{k}")).collect(),
        )?;
        let prim = ideal_and_prim(&a)?;
        let k = prim.projections.len();
        let mut theta = Vec::with_capacity(self.s.len());
        for t in 0..self.s.len() {
            let mut th = vec![None; k];
            for i in 0..k {
                let hits: Vec<usize> = (0..k)
                    .filter(|&j| {
                        self.fibres[t]
                            .basis()
                            .iter()
                            .any(|x| !prim.projections[j].mul(x).mul(&prim.projections[i]).is_zero())
                    })
                    .collect();
                match hits.len() {
                    0 => {}
                    1 => th[i] = Some(hits[0]),
                    _ => return Err(CstarError::NotPartialBijection(format!("B_{} at block {i}", self.s.name(t)))),
                }
            }
            let mut img: Vec<usize> = th.iter().flatten().copied().collect();
            img.sort_unstable();
            img.dedup();
            if img.len() != th.iter().flatten().count() {
                return Err(CstarError::NotPartialBijection(format!(
                    "B_{} is not injective on blocks",
                    self.s.name(t)
                )));
            }
            theta.push(th);
        }
        let act = SActionOnSpace::new(self.s.clone(), prim.space.clone(), theta)?;
        Ok((prim, act))
    }

    /// Hilbert-bimodule identities for every fibre.
    pub fn bimodule_report(&self) -> CheckReport {
        let s = &self.s;
        let mut rep = CheckReport::default();
        let one = s.unit().unwrap();
        let a = &self.fibres[one];
        for t in 0..s.len() {
            let m = &self.fibres[t];
            let name = s.name(t);
            let (mm, mstar) = (m.product(&m.adjoint()), m.adjoint());
            let smm = mstar.product(m);
            rep.check(a.product(m).is_subspace_of(m) && m.product(a).is_subspace_of(m), || {
                format!("A·B_{name}·A ⊄ B_{name}")
            });
            rep.check(mm.is_subspace_of(a) && smm.is_subspace_of(a), || format!("inner products of B_{name} leave A"));
            rep.check(a.product(&mm).is_subspace_of(&mm) && mm.product(a).is_subspace_of(&mm), || {
                format!("span(B_{name}B_{name}*) is not an ideal")
            });
            rep.check(a.product(&smm).is_subspace_of(&smm) && smm.product(a).is_subspace_of(&smm), || {
                format!("span(B_{name}*B_{name}) is not an ideal")
            });
            rep.check(mm.product(m) == *m, || format!("B_{name}B_{name}*B_{name} ≠ B_{name}"));
            for x in m.basis() {
                for y in m.basis() {
                    for z in m.basis() {
                        let lhs = x.mul(&y.adjoint()).mul(z);
                        let rhs = x.mul(&y.adjoint().mul(z));
                        rep.check(lhs == rhs, || format!("⟨⟨x,y⟩⟩z ≠ x⟨y,z⟩ in B_{name}"));
                    }
                }
            }
            // the dual is the unique fibre K with M K M = M and K M K = K
            let dual = &self.fibres[s.star(t)];
            for k in &self.fibres {
                let ok = k.product(m).product(k) == *k && m.product(k).product(m) == *m;
                rep.check(ok == (k == dual), || format!("dual of B_{name} is not unique among the fibres"));
            }
            if s.is_idempotent(t) {
                let is_ideal = m.is_subspace_of(a) && a.product(m).is_subspace_of(m) && m.product(a).is_subspace_of(m);
                rep.check(m.product(m) == *m && mstar == *m && is_ideal, || format!("B_{name} is not an ideal of A"));
            }
        }
        rep
    }

    pub fn to_data(&self) -> BundleData {
        BundleData {
            semigroup: self.s.to_data(),
            ambient: self.ambient.to_data(),
            fibres: (0..self.s.len())
                .map(|t| (self.s.name(t).to_string(), self.fibres[t].basis().iter().map(Matrix::to_data).collect()))
                .collect(),
        }
    }
}

/// JSON form of a Fell bundle over an inverse semigroup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleData {
    pub semigroup: SemigroupData,
    pub ambient: AlgebraData,
    pub fibres: BTreeMap<String, Vec<Vec<Vec<String>>>>,
}

impl BundleData {
    pub fn build(&self) -> Result<FellBundle, CstarError> {
        let s = self.semigroup.build().map_err(ActionError::from)?;
        let ambient = self.ambient.build()?;
        let fibres = (0..s.len())
            .map(|t| {
                self.fibres
                    .get(s.name(t))
                    .map(|ms| ms.iter().map(|m| Matrix::from_data(m)).collect::<Result<Vec<_>, _>>())
                    .unwrap_or(Ok(vec![]))
            })
            .collect::<Result<Vec<_>, _>>()?;
        FellBundle::new(s, ambient, fibres)
    }
}

/// `B_t = span{δ_g : g ∈ L_t}` inside the groupoid algebra of `L`.
pub fn fell_bundle_from_grading(gr: &SGradedGroupoid) -> Result<FellBundle, CstarError> {
    let l = gr.groupoid();
    let ambient = groupoid_algebra(l);
    let fibres = gr.slices().iter().map(|sl| sl.ones().map(|g| ambient.basis()[g].clone()).collect()).collect();
    let s = gr.semigroup().clone();
    if gr.is_saturated() {
        FellBundle::new(s, ambient, fibres)
    } else {
        FellBundle::new_unsaturated(s, ambient, fibres)
    }
}

// ---------------------------------------------------------------------------
// Fell bundles over groupoids.

/// A Fell bundle over a finite discrete groupoid with fibres `B_g ⊆ M_n`.
#[derive(Debug, Clone)]
pub struct GroupoidFellBundle {
    l: Arc<FinGroupoid>,
    n: usize,
    fibres: Vec<MatSpace>,
}

/// Two computations of the section algebra of a groupoid Fell bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionComparison {
    pub dim_convolution: usize,
    pub dim_sections: usize,
    pub blocks_convolution: Vec<usize>,
    pub blocks_sections: Vec<usize>,
    pub unit_fibre_injective: bool,
    /// The sum map from sections onto the convolution algebra is bijective.
    pub isomorphic: bool,
}

impl GroupoidFellBundle {
    pub fn new(l: Arc<FinGroupoid>, n: usize, fibres: Vec<Vec<Matrix>>) -> Result<GroupoidFellBundle, CstarError> {
        if fibres.len() != l.n1() {
            return Err(CstarError::Malformed("one fibre per arrow required".into()));
        }
        let fibres: Vec<MatSpace> = fibres.into_iter().map(|f| MatSpace::new(n, f)).collect();
        let g1 = l.g1();
        for g in 0..l.n1() {
            for h in 0..l.n1() {
                if let Some(gh) = l.mul(g, h) {
                    if !fibres[g].product(&fibres[h]).is_subspace_of(&fibres[gh]) {
                        return Err(CstarError::ProductNotContained(g1.name(g).into(), g1.name(h).into()));
                    }
                }
            }
            if fibres[g].adjoint() != fibres[l.inverse(g)] {
                return Err(CstarError::NotInvolutive(g1.name(g).into()));
            }
            let sg = l.unit(l.s()[g]);
            for x in fibres[g].basis() {
                let xx = x.adjoint().mul(x);
                if !xx.is_psd() || !fibres[sg].contains(&xx) {
                    return Err(CstarError::PositivityFailure(format!("x*x for x ∈ B_{}", g1.name(g))));
                }
            }
        }
        Ok(GroupoidFellBundle { l, n, fibres })
    }

    /// `(g, x) ↦ λ_g ⊗ x` in `M_{|L¹|} ⊗ M_n`.
    fn embed(&self, g: usize, x: &Matrix) -> Matrix {
        Matrix::kron(&delta(&self.l, g), x)
    }

    /// The convolution algebra `⊕_g B_g`.
    pub fn convolution_algebra(&self) -> Result<StarAlgebra, CstarError> {
        let mut basis = Vec::new();
        let mut labels = Vec::new();
        for (g, f) in self.fibres.iter().enumerate() {
            for (k, x) in f.basis().iter().enumerate() {
                basis.push(self.embed(g, x));
                labels.push(format!("{}:{k}", self.l.g1().name(g)));
            }
        }
        StarAlgebra::new(self.l.n1() * self.n, basis, labels)
    }

    /// The bundle `C_t = ⊕_{g∈L_t} B_g` over `S`.
    pub fn over_semigroup(&self, gr: &SGradedGroupoid) -> Result<FellBundle, CstarError> {
        let ambient = self.convolution_algebra()?;
        let fibres = gr
            .slices()
            .iter()
            .map(|sl| sl.ones().flat_map(|g| self.fibres[g].basis().iter().map(move |x| self.embed(g, x))).collect())
            .collect();
        FellBundle::new_unsaturated(gr.semigroup().clone(), ambient, fibres)
    }

    pub fn compare_sections(&self, gr: &SGradedGroupoid) -> Result<SectionComparison, CstarError> {
        if gr.groupoid() != &*self.l {
            return Err(CstarError::Malformed("grading of a different groupoid".into()));
        }
        let conv = self.convolution_algebra()?;
        let bundle = self.over_semigroup(gr)?;
        let sect = bundle.section_algebra()?;
        let ker = bundle.e_map_kernel();
        let total: usize = bundle.dims().iter().sum();
        let image_dim = total - ker.dim;
        Ok(SectionComparison {
            dim_convolution: conv.dim(),
            dim_sections: sect.algebra.dim(),
            blocks_convolution: conv.blocks()?,
            blocks_sections: sect.blocks.clone().ok_or_else(|| CstarError::NotSplit("section algebra".into()))?,
            unit_fibre_injective: sect.unit_fibre_injective,
            isomorphic: ker.spanned_by_relations && image_dim == conv.dim(),
        })
    }
}

/// The line bundle `B_g = ℂ` over a groupoid.
pub fn trivial_line_bundle(l: Arc<FinGroupoid>) -> GroupoidFellBundle {
    let fibres = vec![vec![Matrix::identity(1)]; l.n1()];
    GroupoidFellBundle::new(l, 1, fibres).expect("line bundle")
}

// ---------------------------------------------------------------------------
// The twisted action on M₂ ⊕ M₂.

/// The matrix model: `B = M₂⊕M₂`, `A = D⊕M₂`, `A_e = 0⊕M₂`, `A_g = uA`
/// with `u = σ⊕σ`.
#[derive(Debug, Clone)]
pub struct MatrixModel {
    pub b: StarAlgebra,
    pub u: Matrix,
    pub a1: MatSpace,
    pub ae: MatSpace,
    pub ag: MatSpace,
    pub bundle: FellBundle,
}

fn embed_block(m: &Matrix, first: bool) -> Matrix {
    let z = Matrix::zero(2);
    if first {
        Matrix::block_diag(&[m.clone(), z])
    } else {
        Matrix::block_diag(&[z, m.clone()])
    }
}

pub fn matrix_model() -> MatrixModel {
    let units: Vec<Matrix> = (0..4).map(|k| Matrix::unit(2, k / 2, k % 2)).collect();
    let mut bb: Vec<Matrix> = units.iter().map(|m| embed_block(m, true)).collect();
    bb.extend(units.iter().map(|m| embed_block(m, false)));
    let labels = ["11", "12", "21", "22"]
        .iter()
        .flat_map(|ij| [format!("L{ij}")])
        .chain(["11", "12", "21", "22"].iter().map(|ij| format!("R{ij}")))
        .collect();
    let b = StarAlgebra::new(4, bb, labels).expect("M2 ⊕ M2");
    let sigma = Matrix::from_ints(&[&[0, 1], &[1, 0]]);
    let u = Matrix::block_diag(&[sigma.clone(), sigma]);
    let ae = MatSpace::new(4, units.iter().map(|m| embed_block(m, false)));
    let d = MatSpace::new(4, [embed_block(&units[0], true), embed_block(&units[3], true)]);
    let a1 = d.sum(&ae);
    let ag = a1.left_mul(&u);
    let s = crate::fixtures::s3();
    let fibres = ["1", "e", "g"]
        .iter()
        .map(|t| match *t {
            "1" => a1.basis().to_vec(),
            "e" => ae.basis().to_vec(),
            _ => ag.basis().to_vec(),
        })
        .collect();
    let bundle = FellBundle::new(s, b.clone(), fibres).expect("the matrix model is a saturated Fell bundle");
    MatrixModel { b, u, a1, ae, ag, bundle }
}

/// Certificate for the twisted action of `S3` on `A = D⊕M₂`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistedActionReport {
    pub fibre_dims: Vec<usize>,
    pub section_dim: usize,
    pub section_blocks: Vec<usize>,
    pub ag_is_ua_and_au: bool,
    pub a1_meet_ag_is_ae: bool,
    pub a1_join_ag_is_b: bool,
    pub alpha_g_preserves_a: bool,
    pub alpha_g_squared_id: bool,
    pub alpha_g_not_inner: bool,
    pub u_not_in_a: bool,
    /// An element `a ∈ A` with `u·a ∉ A`.
    pub ua_witness: Option<String>,
    pub omega_eg_equals_ge: bool,
    pub omega_eg_is_u_on_ae: bool,
    pub omega_eg_nontrivial: bool,
    pub cocycle_identities: bool,
    pub sieben_fails: bool,
    pub bundle_matches: bool,
}

impl TwistedActionReport {
    pub fn all_hold(&self) -> bool {
        self.fibre_dims == [6, 4, 6]
            && self.section_dim == 8
            && self.section_blocks == [2, 2]
            && self.ag_is_ua_and_au
            && self.a1_meet_ag_is_ae
            && self.a1_join_ag_is_b
            && self.alpha_g_preserves_a
            && self.alpha_g_squared_id
            && self.alpha_g_not_inner
            && self.u_not_in_a
            && self.ua_witness.is_some()
            && self.omega_eg_equals_ge
            && self.omega_eg_is_u_on_ae
            && self.omega_eg_nontrivial
            && self.cocycle_identities
            && self.sieben_fails
            && self.bundle_matches
    }
}

fn fmt_matrix(m: &Matrix) -> String {
    let mut s = String::from("[");
    for i in 0..m.n {
        if i > 0 {
            s.push_str("; ");
        }
        for j in 0..m.n {
            if j > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{}", fmt_scalar(m.get(i, j)));
        }
    }
    s.push(']');
    s
}

/// Verifies the twisted action of the matrix model exactly.
pub fn verify_twisted_action() -> Result<TwistedActionReport, CstarError> {
    let mm = matrix_model();
    let (a1, ae, ag, u) = (&mm.a1, &mm.ae, &mm.ag, &mm.u);
    let b = mm.b.space();
    let sect = mm.bundle.section_algebra()?;
    let alpha = |x: &Matrix| u.mul(x).mul(&u.adjoint());
    let i4 = Matrix::identity(4);
    let pe = embed_block(&Matrix::identity(2), false);
    // units of the domains D_t = A_{tt*}: v_1 = 1, v_e = p_e, v_g = u
    let s = mm.bundle.semigroup().clone();
    let v = |t: usize| match s.name(t) {
        "1" => i4.clone(),
        "e" => pe.clone(),
        _ => u.clone(),
    };
    let dom_unit = |t: usize| if s.name(s.rng(t)) == "e" { pe.clone() } else { i4.clone() };
    // ω(r,s) = v_r v_s v_{rs}* restricted to D_{rs}
    let omega = |r: usize, t: usize| v(r).mul(&v(t)).mul(&v(s.mul(r, t)).adjoint()).mul(&dom_unit(s.mul(r, t)));
    let al = |r: usize, x: &Matrix| v(r).mul(x).mul(&v(r).adjoint());
    let (e, g) = (s.el("e"), s.el("g"));
    let mut cocycle = true;
    for r in 0..s.len() {
        for t in 0..s.len() {
            for w in 0..s.len() {
                let p = dom_unit(s.mul(s.mul(r, t), w));
                let lhs = al(r, &omega(t, w)).mul(&omega(r, s.mul(t, w))).mul(&p);
                let rhs = omega(r, t).mul(&omega(s.mul(r, t), w)).mul(&p);
                cocycle &= lhs == rhs;
            }
            let dom = if s.name(s.src(s.mul(r, t))) == "e" { ae } else { a1 };
            for a in dom.basis() {
                let lhs = al(r, &al(t, a));
                let rhs = omega(r, t).mul(&al(s.mul(r, t), a)).mul(&omega(r, t).adjoint());
                cocycle &= lhs == rhs;
            }
        }
    }
    let ua_witness = a1.basis().iter().find(|a| !a1.contains(&u.mul(a))).map(fmt_matrix);
    let prim =
        ideal_and_prim(&StarAlgebra::new(4, a1.basis().to_vec(), (0..a1.dim()).map(|k| format!("a{k}")).collect())?)?;
    let moves_centre = prim.projections.iter().any(|p| alpha(p) != *p);
    let bundle_matches = mm.bundle.fibre(s.unit().unwrap()) == a1
        && mm.bundle.fibre(e) == &ae.right_mul(&v(e))
        && mm.bundle.fibre(g) == &a1.right_mul(&v(g));
    Ok(TwistedActionReport {
        fibre_dims: mm.bundle.dims(),
        section_dim: sect.algebra.dim(),
        section_blocks: sect.blocks.unwrap_or_default(),
        ag_is_ua_and_au: *ag == a1.left_mul(u) && *ag == a1.right_mul(u),
        a1_meet_ag_is_ae: a1.intersect(ag) == *ae,
        a1_join_ag_is_b: a1.sum(ag) == *b,
        alpha_g_preserves_a: a1.basis().iter().all(|x| a1.contains(&alpha(x))),
        alpha_g_squared_id: a1.basis().iter().all(|x| alpha(&alpha(x)) == *x),
        alpha_g_not_inner: moves_centre,
        u_not_in_a: !a1.contains(u),
        ua_witness,
        omega_eg_equals_ge: omega(e, g) == omega(g, e),
        omega_eg_is_u_on_ae: omega(e, g) == u.mul(&pe),
        omega_eg_nontrivial: omega(e, g) != pe,
        cocycle_identities: cocycle,
        sieben_fails: omega(e, g) != dom_unit(s.mul(e, g)),
        bundle_matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn scalar_text_round_trip() {
        for s in ["0", "3/4", "-2", "1/2+3/4 i", "-1-1/3 i", "5 i", "-1 i"] {
            let x = parse_scalar(s).unwrap();
            assert_eq!(fmt_scalar(&x), s);
        }
        assert_eq!(parse_scalar("i").unwrap(), imag_unit());
        assert!(parse_scalar("x").is_err());
    }

    #[test]
    fn psd_decisions() {
        assert!(Matrix::from_ints(&[&[2, 1], &[1, 2]]).is_psd());
        assert!(Matrix::from_ints(&[&[1, 1], &[1, 1]]).is_psd());
        assert!(!Matrix::from_ints(&[&[1, 2], &[2, 1]]).is_psd());
        assert!(!Matrix::from_ints(&[&[0, 1], &[1, 0]]).is_psd());
    }

    #[test]
    fn groupoid_algebra_blocks() {
        assert_eq!(groupoid_algebra(&fixtures::p2()).blocks().unwrap(), vec![2]);
        assert_eq!(groupoid_algebra(&fixtures::gm()).blocks().unwrap(), vec![1, 1, 1]);
        assert_eq!(groupoid_algebra(&FinGroupoid::cyclic(4)).blocks().unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(groupoid_algebra(&fixtures::cech3()).blocks().unwrap(), vec![1, 1, 2]);
        let z3 = groupoid_algebra(&FinGroupoid::cyclic(3));
        assert!(matches!(z3.blocks(), Err(CstarError::NotSplit(_))));
    }

    #[test]
    fn morita() {
        let m2 = StarAlgebra::full(2);
        let c = StarAlgebra::full(1);
        assert!(morita_equivalent(&m2, &c).unwrap());
        assert!(!morita_equivalent(&diagonal_algebra(2), &c).unwrap());
        assert!(morita_equivalent(&groupoid_algebra(&fixtures::cech3()), &diagonal_algebra(3)).unwrap());
    }

    #[test]
    fn gm_section_algebra() {
        let gm = Arc::new(fixtures::gm());
        let slices = fixtures::gm_slices().iter().map(|v| gm.g1().set_of(v).unwrap()).collect();
        let gr = SGradedGroupoid::new(fixtures::s3(), gm.clone(), slices).unwrap();
        let f = fell_bundle_from_grading(&gr).unwrap();
        assert_eq!(f.dims(), vec![2, 1, 2]);
        let k = f.e_map_kernel();
        assert_eq!(k.dim, 2);
        assert!(k.spanned_by_relations);
        let sect = f.section_algebra().unwrap();
        assert_eq!(sect.algebra.dim(), 3);
        assert_eq!(sect.blocks, Some(vec![1, 1, 1]));
        assert!(sect.unit_fibre_injective);
        assert!(f.bimodule_report().passed());
    }

    #[test]
    fn matrix_model_reproduces_the_twisted_action() {
        let r = verify_twisted_action().unwrap();
        assert!(r.all_hold(), "{r:?}");
        let mm = matrix_model();
        assert_eq!(mm.bundle.e_map_kernel().dim, 8);
        assert!(mm.bundle.bimodule_report().passed());
    }

    #[test]
    fn prim_action_of_the_matrix_model() {
        let mm = matrix_model();
        let (prim, act) = mm.bundle.prim_action().unwrap();
        assert_eq!(prim.space.len(), 3);
        assert_eq!(prim.ideals().len(), 8);
        let s = act.semigroup();
        let m2 = (0..3).find(|&j| prim.sizes[j] == 2).unwrap();
        let g = s.el("g");
        assert_eq!(act.theta(g, m2), Some(m2));
        let small: Vec<usize> = (0..3).filter(|&j| j != m2).collect();
        assert_eq!(act.theta(g, small[0]), Some(small[1]));
        let e = s.el("e");
        assert_eq!((0..3).filter(|&j| act.theta(e, j).is_some()).collect::<Vec<_>>(), vec![m2]);
    }

    #[test]
    fn suprema() {
        let x = FinSpace::discrete(&["a", "b"]);
        let c2 = diagonal_algebra(2);
        let good = |u: &PointSet| MatSpace::new(2, u.ones().map(|k| c2.basis()[k].clone()));
        assert_eq!(suprema_check(&x, good).unwrap(), None);
        let bad = |u: &PointSet| if u.count_ones(..) == 2 { c2.space().clone() } else { MatSpace::zero(2) };
        assert!(suprema_check(&x, bad).unwrap().is_some());
    }

    #[test]
    fn groupoid_bundle_two_ways() {
        let z2 = Arc::new(FinGroupoid::cyclic(2));
        let d: Vec<Matrix> = vec![Matrix::unit(2, 0, 0), Matrix::unit(2, 1, 1)];
        let b = GroupoidFellBundle::new(z2.clone(), 2, vec![d.clone(), d]).unwrap();
        let triv = crate::action::grading_from_cocycle(&z2, &InvSemigroup::trivial(), &[0, 0]).unwrap();
        let cmp = b.compare_sections(&triv).unwrap();
        assert_eq!(cmp.dim_convolution, 4);
        assert_eq!(cmp.blocks_sections, vec![1, 1, 1, 1]);
        assert!(cmp.isomorphic);
        let z4 = InvSemigroup::cyclic_group(4);
        let nonsat = crate::action::grading_from_cocycle(&z2, &z4, &[0, 2]).unwrap();
        let cmp = b.compare_sections(&nonsat).unwrap();
        assert_eq!(cmp.dim_sections, 4);
        assert!(cmp.unit_fibre_injective && cmp.isomorphic);
    }
}
