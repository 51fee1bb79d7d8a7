//! Minimal dense linear algebra: row-major matrix/vector containers,
//! Householder QR, ridge-stabilized solves, and the sphere/tangent
//! projections the solvers are built on.
//!
//! Everything here is a pure function on immutable values; there is no
//! global state and all types are `Send + Sync` for plain scalars.

mod qr;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

pub use qr::{qr, solve, QrFactorization};

/// Floating-point scalar the kernels are generic over (`f32` or `f64`).
pub trait Scalar:
    num_traits::Float + std::iter::Sum + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Converts an `f64` constant (tolerances, literals) into `Self`.
    fn of(v: f64) -> Self {
        num_traits::cast(v).expect("finite constant")
    }

    /// Widens to `f64` for reporting and cross-precision comparison.
    fn to_f64(self) -> f64 {
        num_traits::cast(self).expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Working precision selector for experiment runs. The math kernels are
/// generic; this is the runtime switch the benchmark layer dispatches on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn label(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::Config(format!("unknown precision `{other}`"))),
        }
    }
}

/// Dense row-major matrix. Entries are validated to be finite on the
/// checked constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "matrix data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::shape("ragged rows".to_string()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Self::from_vec(r, c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> DenseVector<T> {
        DenseVector::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// `self * v`.
    pub fn matvec(&self, v: &DenseVector<T>) -> DenseVector<T> {
        assert_eq!(self.cols, v.len(), "matvec shape");
        DenseVector::from_fn(self.rows, |i| {
            let row = self.row(i);
            let mut acc = T::zero();
            for (a, x) in row.iter().zip(v.data()) {
                acc = acc + *a * *x;
            }
            acc
        })
    }

    /// `self^T * v` without forming the transpose.
    pub fn matvec_t(&self, v: &DenseVector<T>) -> DenseVector<T> {
        assert_eq!(self.rows, v.len(), "matvec_t shape");
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + *a * vi;
            }
        }
        DenseVector { data: out }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o = *o + aik * *b;
                }
            }
        }
        out
    }

    /// `self^T * self`, exploiting symmetry of the result.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        for i in 0..self.rows {
            let row = self.row(i);
            for a in 0..n {
                let ra = row[a];
                if ra == T::zero() {
                    continue;
                }
                for b in a..n {
                    out[(a, b)] = out[(a, b)] + ra * row[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                out[(a, b)] = out[(b, a)];
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| *v * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }

    /// Adds `s` to every diagonal entry in place.
    pub fn shift_diagonal(&mut self, s: T) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self[(i, i)] = self[(i, i)] + s;
        }
    }

    pub fn frob_norm(&self) -> T {
        self.data
            .iter()
            .map(|v| *v * *v)
            .sum::<T>()
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn is_all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Casts every entry into another scalar type.
    pub fn cast<S: Scalar>(&self) -> DenseMatrix<S> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| S::of(v.to_f64())).collect(),
        }
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Dense vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector<T> {
    data: Vec<T>,
}

impl<T: Scalar> DenseVector<T> {
    pub fn from_vec(data: Vec<T>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Self { data })
    }

    pub fn from_slice(data: &[T]) -> Result<Self> {
        Self::from_vec(data.to_vec())
    }

    pub fn from_fn(len: usize, f: impl FnMut(usize) -> T) -> Self {
        Self {
            data: (0..len).map(f).collect(),
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![T::zero(); len],
        }
    }

    /// Standard basis vector `e_i`.
    pub fn basis(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v[i] = T::one();
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn dot(&self, rhs: &Self) -> T {
        assert_eq!(self.len(), rhs.len(), "dot shape");
        let mut acc = T::zero();
        for (a, b) in self.data.iter().zip(&rhs.data) {
            acc = acc + *a * *b;
        }
        acc
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            data: self.data.iter().map(|v| *v * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len(), "add shape");
        Self {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len(), "sub shape");
        Self {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }

    /// `self + s * rhs`.
    pub fn axpy(&self, s: T, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len(), "axpy shape");
        Self {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a + s * *b)
                .collect(),
        }
    }

    /// Rank-1 outer product `self * rhs^T`.
    pub fn outer(&self, rhs: &Self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.len(), rhs.len());
        for i in 0..self.len() {
            for j in 0..rhs.len() {
                out[(i, j)] = self.data[i] * rhs.data[j];
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn is_all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<S: Scalar>(&self) -> DenseVector<S> {
        DenseVector {
            data: self.data.iter().map(|v| S::of(v.to_f64())).collect(),
        }
    }
}

impl<T: Scalar> std::ops::Index<usize> for DenseVector<T> {
    type Output = T;

    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T: Scalar> std::ops::IndexMut<usize> for DenseVector<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

/// Projects onto the unit sphere: `u / ||u||`.
pub fn proj_sphere<T: Scalar>(u: &DenseVector<T>) -> Result<DenseVector<T>> {
    let n = u.norm();
    if n == T::zero() {
        return Err(Error::Degenerate("cannot project the zero vector onto the sphere"));
    }
    Ok(u.scale(T::one() / n))
}

/// Removes from `g` its component along `u`: `(I - u u^T / ||u||^2) g`.
/// The result is orthogonal to `u`.
pub fn proj_tangent<T: Scalar>(u: &DenseVector<T>, g: &DenseVector<T>) -> Result<DenseVector<T>> {
    if u.len() != g.len() {
        return Err(Error::shape(format!(
            "tangent projection: len {} vs {}",
            u.len(),
            g.len()
        )));
    }
    let uu = u.dot(u);
    if uu == T::zero() {
        return Err(Error::Degenerate("tangent projection at the zero vector"));
    }
    Ok(g.axpy(-u.dot(g) / uu, u))
}

/// Cosine similarity `a^T b / (||a|| ||b||)`, clamped to `[-1, 1]` against
/// rounding.
pub fn cosine_sim<T: Scalar>(a: &DenseVector<T>, b: &DenseVector<T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "cosine similarity: len {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let na = a.norm();
    let nb = b.norm();
    if na == T::zero() || nb == T::zero() {
        return Err(Error::Degenerate("cosine similarity of a zero vector"));
    }
    let c = a.dot(b) / (na * nb);
    Ok(c.min(T::one()).max(-T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_reject_bad_input() {
        assert!(matches!(
            DenseMatrix::from_vec(2, 2, vec![1.0f64; 3]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            DenseVector::from_vec(vec![f64::INFINITY]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn proj_sphere_normalizes() {
        let u = DenseVector::from_vec(vec![3.0f64, 4.0]).unwrap();
        let p = proj_sphere(&u).unwrap();
        assert_eq!(p.data(), &[0.6, 0.8]);
        // idempotent on the sphere
        let q = proj_sphere(&p).unwrap();
        assert!((q.norm() - 1.0).abs() <= 4.0 * f64::EPSILON);
        assert!(matches!(
            proj_sphere(&DenseVector::<f64>::zeros(2)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn proj_tangent_examples() {
        let u = DenseVector::from_vec(vec![1.0f64, 0.0]).unwrap();
        let g = DenseVector::from_vec(vec![1.0, 0.0]).unwrap();
        assert_eq!(proj_tangent(&u, &g).unwrap().data(), &[0.0, 0.0]);

        let u = DenseVector::from_vec(vec![0.0f64, 1.0]).unwrap();
        let g = DenseVector::from_vec(vec![2.0, -1.0]).unwrap();
        assert_eq!(proj_tangent(&u, &g).unwrap().data(), &[2.0, 0.0]);

        // hand expansion of (I - uu^T) g at u = (0.6, 0.8), g = (1, 0)
        let u = DenseVector::from_vec(vec![0.6f64, 0.8]).unwrap();
        let g = DenseVector::from_vec(vec![1.0, 0.0]).unwrap();
        let t = proj_tangent(&u, &g).unwrap();
        assert!((t[0] - 0.64).abs() < 1e-15);
        assert!((t[1] + 0.48).abs() < 1e-15);
        // orthogonality
        assert!(u.dot(&t).abs() <= 1e-15);
    }

    #[test]
    fn cosine_sim_examples() {
        let e1 = DenseVector::from_vec(vec![1.0f64, 0.0]).unwrap();
        let a = DenseVector::from_vec(vec![2.0f64, 0.0]).unwrap();
        let b = DenseVector::from_vec(vec![0.0f64, 3.0]).unwrap();
        let c = DenseVector::from_vec(vec![-5.0f64, 0.0]).unwrap();
        assert_eq!(cosine_sim(&e1, &a).unwrap(), 1.0);
        assert_eq!(cosine_sim(&e1, &b).unwrap(), 0.0);
        assert_eq!(cosine_sim(&e1, &c).unwrap(), -1.0);
    }

    #[test]
    fn matvec_and_gram() {
        let a = DenseMatrix::from_rows(&[&[1.0f64, 2.0], &[3.0, 4.0], &[5.0, 6.0]]).unwrap();
        let v = DenseVector::from_vec(vec![1.0, -1.0]).unwrap();
        assert_eq!(a.matvec(&v).data(), &[-1.0, -1.0, -1.0]);
        let w = DenseVector::from_vec(vec![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(a.matvec_t(&w).data(), &[6.0, 8.0]);
        let g = a.gram();
        let gt = a.transpose().matmul(&a);
        assert!(g.sub(&gt).max_abs() == 0.0);
    }
}
