//! Symmetric matrices and symmetric tensor products.
//!
//! [`SymMatrix`] stores only the upper triangle, so every value it can hold
//! is exactly symmetric. The dyad classification in [`classify_dyad`] decides
//! whether a symmetric matrix can be written as `a ⊙ b = (a bᵀ + b aᵀ)/2` and,
//! when it can, returns explicit witnesses.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Default threshold used by [`classify_dyad`] when callers have no better choice.
pub const DEFAULT_DYAD_TOL: f64 = 1e-9;

type Storage = SmallVec<[f64; 6]>;

/// A `d × d` symmetric matrix stored as its upper triangle (row-major).
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    upper: Storage,
}

#[inline]
fn tri_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

#[inline]
fn tri_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row i of the upper triangle starts at i·d − i(i−1)/2
    i * dim - i * i.saturating_sub(1) / 2 + (j - i)
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            dim,
            upper: SmallVec::from_elem(0.0, tri_len(dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds the matrix from an entry function evaluated on the upper triangle.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a symmetric matrix from full rows. Rows that are asymmetric by more
    /// than `tol · max(1, max|entry|)` are rejected; the stored value is the
    /// symmetric part.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
        }
        let scale = rows
            .iter()
            .flatten()
            .fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let mut asym = 0.0_f64;
        for i in 0..dim {
            for j in 0..dim {
                asym = asym.max((rows[i][j] - rows[j][i]).abs());
            }
        }
        if asym > tol * scale {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self::from_fn(dim, |i, j| 0.5 * (rows[i][j] + rows[j][i])))
    }

    /// Symmetric part of a full matrix given as rows.
    pub fn sym_part(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| 0.5 * (rows[i][j] + rows[j][i]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[tri_index(self.dim, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = tri_index(self.dim, i, j);
        self.upper[k] = v;
    }

    /// Raw upper-triangle storage, row-major.
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Squared Frobenius norm `Σᵢⱼ Mᵢⱼ²` (off-diagonal entries count twice).
    pub fn norm_sq(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Frobenius inner product; panics on dimension mismatch (see
    /// [`frobenius_inner`] for the checked version).
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in dot");
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let p = self.get(i, j) * other.get(i, j);
                s += if i == j { p } else { 2.0 * p };
            }
        }
        s
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `vᵀ M v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.upper.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.upper
            .iter()
            .zip(&other.upper)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// `Q M Qᵀ` for a square `Q` given as rows.
    pub fn conjugate(&self, q: &[Vec<f64>]) -> Self {
        let d = self.dim;
        let m = self.to_dmatrix();
        let qm = DMatrix::from_fn(d, d, |i, j| q[i][j]);
        let r = &qm * m * qm.transpose();
        Self::from_fn(d, |i, j| 0.5 * (r[(i, j)] + r[(j, i)]))
    }

    /// Number of coordinates in the orthonormal basis of symmetric matrices.
    pub fn coord_len(dim: usize) -> usize {
        tri_len(dim)
    }

    /// Coordinates with respect to the Frobenius-orthonormal basis
    /// `{eᵢ⊗eᵢ} ∪ {√2 eᵢ⊙eⱼ : i < j}`; the Euclidean norm of the coordinates
    /// equals the Frobenius norm of the matrix.
    pub fn to_coords(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(tri_len(self.dim));
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.get(i, j);
                c.push(if i == j { v } else { v * std::f64::consts::SQRT_2 });
            }
        }
        c
    }

    pub fn from_coords(dim: usize, coords: &[f64]) -> Self {
        let mut m = Self::zeros(dim);
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                let v = coords[k];
                m.set(i, j, if i == j { v } else { v / std::f64::consts::SQRT_2 });
                k += 1;
            }
        }
        m
    }

    /// The `k`-th element of the orthonormal basis used by [`Self::to_coords`].
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut c = vec![0.0; tri_len(dim)];
        c[k] = 1.0;
        Self::from_coords(dim, &c)
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMatrix{:?}", self.to_rows())
    }
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SymMatrix::from_rows(&rows, 1e-12).map_err(D::Error::custom)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&SymMatrix> for &SymMatrix {
            type Output = SymMatrix;
            fn $method(self, rhs: &SymMatrix) -> SymMatrix {
                assert_eq!(self.dim, rhs.dim, "dimension mismatch");
                let mut out = self.clone();
                for (o, r) in out.upper.iter_mut().zip(&rhs.upper) {
                    *o = *o $op *r;
                }
                out
            }
        }
        impl $tr<SymMatrix> for SymMatrix {
            type Output = SymMatrix;
            fn $method(self, rhs: SymMatrix) -> SymMatrix {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&SymMatrix> for SymMatrix {
            type Output = SymMatrix;
            fn $method(self, rhs: &SymMatrix) -> SymMatrix {
                (&self).$method(rhs)
            }
        }
    };
}
binop!(Add, add, +);
binop!(Sub, sub, -);

impl AddAssign<&SymMatrix> for SymMatrix {
    fn add_assign(&mut self, rhs: &SymMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (o, r) in self.upper.iter_mut().zip(&rhs.upper) {
            *o += *r;
        }
    }
}

impl SubAssign<&SymMatrix> for SymMatrix {
    fn sub_assign(&mut self, rhs: &SymMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (o, r) in self.upper.iter_mut().zip(&rhs.upper) {
            *o -= *r;
        }
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, s: f64) -> SymMatrix {
        self.scaled(s)
    }
}

impl Mul<f64> for SymMatrix {
    type Output = SymMatrix;
    fn mul(self, s: f64) -> SymMatrix {
        self.scaled(s)
    }
}

impl Mul<&SymMatrix> for f64 {
    type Output = SymMatrix;
    fn mul(self, m: &SymMatrix) -> SymMatrix {
        m.scaled(self)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scaled(-1.0)
    }
}

impl Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scaled(-1.0)
    }
}

/// `a ⊙ b = (a bᵀ + b aᵀ)/2`.
pub fn sym_dyad(a: &[f64], b: &[f64]) -> Result<SymMatrix> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("vectors must be non-empty".into()));
    }
    Ok(SymMatrix::from_fn(a.len(), |i, j| {
        0.5 * (a[i] * b[j] + b[i] * a[j])
    }))
}

/// Checked Frobenius inner product `A : B`.
pub fn frobenius_inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(a.dot(b))
}

/// Eigen-decomposition of a symmetric matrix.
///
/// Eigenvalues are sorted in decreasing order; `vectors[k]` is the unit
/// eigenvector for `values[k]`. The 2×2 case is closed-form, larger sizes use
/// nalgebra's symmetric QR iteration. Each eigenvector is oriented so that its
/// largest-magnitude component is positive.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn sym_eigen(m: &SymMatrix) -> SymEigen {
    let d = m.dim();
    let mut pairs: Vec<(f64, Vec<f64>)> = match d {
        1 => vec![(m.get(0, 0), vec![1.0])],
        2 => eigen2(m.get(0, 0), m.get(0, 1), m.get(1, 1)),
        _ => {
            let se = nalgebra::SymmetricEigen::new(m.to_dmatrix());
            (0..d)
                .map(|k| {
                    let v = se.eigenvectors.column(k).iter().copied().collect();
                    (se.eigenvalues[k], v)
                })
                .collect()
        }
    };
    for (_, v) in pairs.iter_mut() {
        orient(v);
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    SymEigen {
        values: pairs.iter().map(|p| p.0).collect(),
        vectors: pairs.into_iter().map(|p| p.1).collect(),
    }
}

fn orient(v: &mut [f64]) {
    let mut k = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[k].abs() + 1e-14 {
            k = i;
        }
    }
    if v[k] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn eigen2(p: f64, q: f64, r: f64) -> Vec<(f64, Vec<f64>)> {
    let mean = 0.5 * (p + r);
    let disc = (0.5 * (p - r)).hypot(q);
    let det = p * r - q * q;
    let (l1, l2) = if mean >= 0.0 {
        let l1 = mean + disc;
        (l1, if l1 != 0.0 { det / l1 } else { mean - disc })
    } else {
        let l2 = mean - disc;
        (if l2 != 0.0 { det / l2 } else { mean + disc }, l2)
    };
    let theta = 0.5 * (2.0 * q).atan2(p - r);
    let (s, c) = theta.sin_cos();
    vec![(l1, vec![c, s]), (l2, vec![-s, c])]
}

/// Outcome tag of [`classify_dyad`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DyadTag {
    Zero,
    RankOneDyad,
    OppositeSignDyad,
    NotDyad,
}

/// Classification of a symmetric matrix with respect to the cone of
/// symmetric tensor products.
///
/// * `OppositeSignDyad`: `sym_dyad(a, b) = M`, `|a| = 1`.
/// * `RankOneDyad`: `sign · a ⊗ a = M` and also `sym_dyad(a, b) = M` with
///   `b = sign · a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadClass {
    pub tag: DyadTag,
    pub a: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub sign: Option<i8>,
}

impl DyadClass {
    fn bare(tag: DyadTag) -> Self {
        Self {
            tag,
            a: None,
            b: None,
            sign: None,
        }
    }

    /// `sym_dyad(a, b)` for the witnesses, if any.
    pub fn reconstruct(&self) -> Option<SymMatrix> {
        match (&self.a, &self.b) {
            (Some(a), Some(b)) => sym_dyad(a, b).ok(),
            _ => None,
        }
    }
}

/// Decides whether `m = a ⊙ b` for some vectors and constructs witnesses.
///
/// `m` is `Zero` when `|m| < tol`; an eigenvalue counts as zero when
/// `|λ| < tol · |m|`. A matrix of rank one is `±a⊗a`; a matrix of rank two is a
/// symmetric dyad iff its two non-zero eigenvalues have opposite signs, in
/// which case, with `λ₊ > 0 > λ₋` and eigenvectors `q₊, q₋`,
/// `γ = √(−λ₊/λ₋)`, `a = γ q₊ + q₋`, `b = (λ₊/γ) q₊ + λ₋ q₋`. For `d > 2` the
/// same construction is applied in the plane spanned by the two eigenvectors
/// of the non-zero eigenvalues; rank above two is never a dyad.
pub fn classify_dyad(m: &SymMatrix, tol: f64) -> Result<DyadClass> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if !m.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let nrm = m.norm();
    if nrm < tol {
        return Ok(DyadClass::bare(DyadTag::Zero));
    }
    let eig = sym_eigen(m);
    let nonzero: Vec<usize> = (0..m.dim())
        .filter(|&k| eig.values[k].abs() >= tol * nrm)
        .collect();
    match nonzero.len() {
        0 => Ok(DyadClass::bare(DyadTag::Zero)),
        1 => {
            let k = nonzero[0];
            let lam = eig.values[k];
            let sign: i8 = if lam >= 0.0 { 1 } else { -1 };
            let s = lam.abs().sqrt();
            let a: Vec<f64> = eig.vectors[k].iter().map(|v| v * s).collect();
            let b: Vec<f64> = a.iter().map(|v| v * f64::from(sign)).collect();
            Ok(DyadClass {
                tag: DyadTag::RankOneDyad,
                a: Some(a),
                b: Some(b),
                sign: Some(sign),
            })
        }
        2 => {
            let (i, j) = (nonzero[0], nonzero[1]);
            let (li, lj) = (eig.values[i], eig.values[j]);
            if li * lj >= 0.0 {
                return Ok(DyadClass::bare(DyadTag::NotDyad));
            }
            // values are sorted decreasingly, so i carries the positive one
            let (lp, qp, ln, qn) = (li, &eig.vectors[i], lj, &eig.vectors[j]);
            let gamma = (-lp / ln).sqrt();
            let mut a: Vec<f64> = qp.iter().zip(qn).map(|(p, n)| gamma * p + n).collect();
            let mut b: Vec<f64> = qp
                .iter()
                .zip(qn)
                .map(|(p, n)| lp / gamma * p + ln * n)
                .collect();
            let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            a.iter_mut().for_each(|v| *v /= na);
            b.iter_mut().for_each(|v| *v *= na);
            Ok(DyadClass {
                tag: DyadTag::OppositeSignDyad,
                a: Some(a),
                b: Some(b),
                sign: None,
            })
        }
        _ => Ok(DyadClass::bare(DyadTag::NotDyad)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m2(p: f64, q: f64, r: f64) -> SymMatrix {
        SymMatrix::from_rows(&[vec![p, q], vec![q, r]], 1e-12).unwrap()
    }

    #[test]
    fn storage_roundtrip_3d() {
        let m = SymMatrix::from_fn(3, |i, j| (10 * i + j) as f64);
        let rows = m.to_rows();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(rows[i][j], rows[j][i]);
            }
        }
        assert_eq!(m.get(1, 2), 12.0);
        assert_eq!(m.get(2, 1), 12.0);
        assert_eq!(m.get(2, 2), 22.0);
    }

    #[test]
    fn sym_dyad_examples() {
        let m = sym_dyad(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(m.to_rows(), vec![vec![0.0, 0.5], vec![0.5, 0.0]]);
        let m = sym_dyad(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        // (a bᵀ + b aᵀ)/2 entry by entry
        let m = sym_dyad(&[1.0, 1.0], &[1.0, -1.0]).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert!(matches!(
            sym_dyad(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn frobenius_examples() {
        let i2 = SymMatrix::identity(2);
        assert_eq!(frobenius_inner(&i2, &i2).unwrap(), 2.0);
        let p = sym_dyad(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(frobenius_inner(&p, &p).unwrap(), 0.5);
        assert_eq!(frobenius_inner(&i2, &SymMatrix::zeros(2)).unwrap(), 0.0);
        assert!(frobenius_inner(&i2, &SymMatrix::identity(3)).is_err());
    }

    #[test]
    fn rejects_asymmetric_rows() {
        let r = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]], 1e-9);
        assert!(matches!(r, Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn classify_identity_is_not_dyad() {
        let c = classify_dyad(&SymMatrix::identity(2), DEFAULT_DYAD_TOL).unwrap();
        assert_eq!(c.tag, DyadTag::NotDyad);
        assert!(c.a.is_none());
    }

    #[test]
    fn classify_opposite_sign_uses_lemma_witnesses() {
        let m = SymMatrix::from_diag(&[1.0, -1.0]);
        let c = classify_dyad(&m, DEFAULT_DYAD_TOL).unwrap();
        assert_eq!(c.tag, DyadTag::OppositeSignDyad);
        let a = c.a.clone().unwrap();
        let b = c.b.clone().unwrap();
        // a ∝ (1,1), b ∝ (1,-1) with |a| = 1
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(a[0], s, epsilon = 1e-14);
        assert_abs_diff_eq!(a[1], s, epsilon = 1e-14);
        assert_abs_diff_eq!(b[0], 1.0 / s, epsilon = 1e-14);
        assert_abs_diff_eq!(b[1], -1.0 / s, epsilon = 1e-14);
        assert!(c.reconstruct().unwrap().max_abs_diff(&m) < 1e-14);
    }

    #[test]
    fn classify_rank_one_and_zero() {
        let c = classify_dyad(&m2(1.0, 0.0, 0.0), DEFAULT_DYAD_TOL).unwrap();
        assert_eq!(c.tag, DyadTag::RankOneDyad);
        assert_eq!(c.sign, Some(1));
        assert_eq!(c.a.clone().unwrap(), vec![1.0, 0.0]);
        let c = classify_dyad(&m2(0.0, 0.0, -4.0), DEFAULT_DYAD_TOL).unwrap();
        assert_eq!(c.sign, Some(-1));
        assert_abs_diff_eq!(c.a.clone().unwrap()[1], 2.0, epsilon = 1e-14);
        let c = classify_dyad(&SymMatrix::zeros(2), DEFAULT_DYAD_TOL).unwrap();
        assert_eq!(c.tag, DyadTag::Zero);
    }

    #[test]
    fn classify_scale_invariant_threshold() {
        // tiny but genuinely rank-two matrices classify the same as their scaled versions
        let m = m2(3.0, 1.0, -2.0);
        let big = classify_dyad(&m.scaled(1e6), DEFAULT_DYAD_TOL).unwrap();
        let small = classify_dyad(&m.scaled(1e-6), 1e-12).unwrap();
        assert_eq!(big.tag, DyadTag::OppositeSignDyad);
        assert_eq!(small.tag, DyadTag::OppositeSignDyad);
    }

    #[test]
    fn classify_three_dimensional() {
        let a = [1.0, 2.0, -0.5];
        let b = [0.3, -1.0, 2.0];
        let m = sym_dyad(&a, &b).unwrap();
        let c = classify_dyad(&m, DEFAULT_DYAD_TOL).unwrap();
        assert_eq!(c.tag, DyadTag::OppositeSignDyad);
        assert!(c.reconstruct().unwrap().max_abs_diff(&m) < 1e-12);
        assert_eq!(
            classify_dyad(&SymMatrix::identity(3), DEFAULT_DYAD_TOL)
                .unwrap()
                .tag,
            DyadTag::NotDyad
        );
        let r1 = sym_dyad(&a, &a).unwrap().scaled(-1.0);
        let c = classify_dyad(&r1, DEFAULT_DYAD_TOL).unwrap();
        assert_eq!(c.tag, DyadTag::RankOneDyad);
        assert_eq!(c.sign, Some(-1));
        // two positive eigenvalues in a plane: not a dyad
        let same = sym_dyad(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap()
            + sym_dyad(&[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            classify_dyad(&same, DEFAULT_DYAD_TOL).unwrap().tag,
            DyadTag::NotDyad
        );
    }

    #[test]
    fn dyad_class_json_shape() {
        let c = classify_dyad(&m2(1.0, 0.0, 0.0), DEFAULT_DYAD_TOL).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["tag"], "RankOneDyad");
        assert_eq!(v["sign"], 1);
        let m: SymMatrix = serde_json::from_str("[[1,2],[2,3]]").unwrap();
        assert_eq!(m.get(0, 1), 2.0);
        assert!(serde_json::from_str::<SymMatrix>("[[1,2],[0,3]]").is_err());
    }

    #[test]
    fn eigen_reconstructs() {
        let m = m2(0.3, -1.7, 2.2);
        let e = sym_eigen(&m);
        let recon = SymMatrix::from_fn(2, |i, j| {
            (0..2)
                .map(|k| e.values[k] * e.vectors[k][i] * e.vectors[k][j])
                .sum()
        });
        assert!(recon.max_abs_diff(&m) < 1e-14);
        assert!(e.values[0] >= e.values[1]);
    }
}
