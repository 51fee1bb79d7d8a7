//! Householder QR and QR-backed linear solves.

use super::{DenseMatrix, DenseVector, Scalar};
use crate::{Error, Result};

/// Packed Householder factorization of an `m x n` matrix with `m >= n`.
///
/// Stores `R` in the upper triangle and the reflector vectors below the
/// diagonal, so one factorization can serve many right-hand sides.
pub struct QrFactorization<T> {
    packed: DenseMatrix<T>,
    // scale of each reflector: H_k = I - tau_k v_k v_k^T with v_k[k] = 1
    tau: Vec<T>,
}

impl<T: Scalar> QrFactorization<T> {
    pub fn compute(a: &DenseMatrix<T>) -> Result<Self> {
        if a.rows() < a.cols() {
            return Err(Error::shape(format!(
                "QR factorization requires rows >= cols, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if !a.is_all_finite() {
            return Err(Error::NonFinite("QR input"));
        }
        let m = a.rows();
        let n = a.cols();
        let mut packed = a.clone();
        let mut tau = vec![T::zero(); n];
        for k in 0..n {
            // Householder vector for column k, rows k..m
            let mut norm2 = T::zero();
            for i in k..m {
                let v = packed[(i, k)];
                norm2 = norm2 + v * v;
            }
            let norm = norm2.sqrt();
            if norm == T::zero() {
                tau[k] = T::zero();
                continue;
            }
            let akk = packed[(k, k)];
            // alpha = -sign(akk) * norm keeps v well conditioned
            let alpha = if akk >= T::zero() { -norm } else { norm };
            let v0 = akk - alpha;
            // v normalized so v[k] = 1; tau = -v0 / alpha
            tau[k] = -v0 / alpha;
            packed[(k, k)] = alpha;
            if v0 != T::zero() {
                for i in (k + 1)..m {
                    packed[(i, k)] = packed[(i, k)] / v0;
                }
            }
            if tau[k] == T::zero() {
                continue;
            }
            // apply H_k to the remaining columns
            for j in (k + 1)..n {
                let mut dot = packed[(k, j)];
                for i in (k + 1)..m {
                    dot = dot + packed[(i, k)] * packed[(i, j)];
                }
                let t = tau[k] * dot;
                packed[(k, j)] = packed[(k, j)] - t;
                for i in (k + 1)..m {
                    let vik = packed[(i, k)];
                    packed[(i, j)] = packed[(i, j)] - t * vik;
                }
            }
        }
        Ok(Self { packed, tau })
    }

    pub fn rows(&self) -> usize {
        self.packed.rows()
    }

    pub fn cols(&self) -> usize {
        self.packed.cols()
    }

    /// Applies `Q^T` to `v` in place.
    fn apply_q_transpose(&self, v: &mut [T]) {
        let m = self.rows();
        let n = self.cols();
        for k in 0..n {
            if self.tau[k] == T::zero() {
                continue;
            }
            let mut dot = v[k];
            for i in (k + 1)..m {
                dot = dot + self.packed[(i, k)] * v[i];
            }
            let t = self.tau[k] * dot;
            v[k] = v[k] - t;
            for i in (k + 1)..m {
                v[i] = v[i] - t * self.packed[(i, k)];
            }
        }
    }

    /// Applies `Q` to `v` in place (reflectors in reverse order).
    fn apply_q(&self, v: &mut [T]) {
        let m = self.rows();
        let n = self.cols();
        for k in (0..n).rev() {
            if self.tau[k] == T::zero() {
                continue;
            }
            let mut dot = v[k];
            for i in (k + 1)..m {
                dot = dot + self.packed[(i, k)] * v[i];
            }
            let t = self.tau[k] * dot;
            v[k] = v[k] - t;
            for i in (k + 1)..m {
                v[i] = v[i] - t * self.packed[(i, k)];
            }
        }
    }

    /// `max |R_ii| / min |R_ii|`; cheap surrogate for the condition number.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.cols();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let d = self.packed[(i, i)].abs().to_f64();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Whether the triangular factor is singular to working precision.
    pub fn is_singular(&self) -> bool {
        let eps = T::epsilon().to_f64();
        let n = self.cols();
        let hi = (0..n)
            .map(|i| self.packed[(i, i)].abs().to_f64())
            .fold(0.0f64, f64::max);
        let cutoff = hi * eps * (n.max(1) as f64);
        (0..n).any(|i| self.packed[(i, i)].abs().to_f64() <= cutoff)
    }

    /// Least-squares solve `min ||A x - rhs||` via `R x = Q^T rhs`.
    pub fn solve(&self, rhs: &DenseVector<T>) -> Result<DenseVector<T>> {
        if rhs.len() != self.rows() {
            return Err(Error::shape(format!(
                "solve: rhs length {} != {}",
                rhs.len(),
                self.rows()
            )));
        }
        if self.is_singular() {
            return Err(Error::Singular {
                cond: self.condition_estimate(),
            });
        }
        let n = self.cols();
        let mut work = rhs.data().to_vec();
        self.apply_q_transpose(&mut work);
        // back substitution on the n x n upper triangle
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut acc = work[i];
            for j in (i + 1)..n {
                acc = acc - self.packed[(i, j)] * x[j];
            }
            x[i] = acc / self.packed[(i, i)];
        }
        DenseVector::from_vec(x)
    }

    /// Explicit `Q` (thin, `m x n`) with the sign convention `diag(R) >= 0`.
    pub fn unpack_q(&self) -> DenseMatrix<T> {
        let m = self.rows();
        let n = self.cols();
        let mut q = DenseMatrix::zeros(m, n);
        let mut col = vec![T::zero(); m];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = T::zero());
            col[j] = T::one();
            self.apply_q(&mut col);
            let flip = self.packed[(j, j)] < T::zero();
            for i in 0..m {
                q[(i, j)] = if flip { -col[i] } else { col[i] };
            }
        }
        q
    }

    /// Explicit `R` (`n x n`) with non-negative diagonal.
    pub fn unpack_r(&self) -> DenseMatrix<T> {
        let n = self.cols();
        let mut r = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let flip = self.packed[(i, i)] < T::zero();
            for j in i..n {
                let v = self.packed[(i, j)];
                r[(i, j)] = if flip { -v } else { v };
            }
        }
        r
    }
}

/// Householder QR of a square matrix with the sign convention
/// `diag(R) >= 0` (enforced by joint sign flips of `Q` columns and `R`
/// rows, so `Q R` is unchanged).
pub fn qr<T: Scalar>(x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    if !x.is_square() {
        return Err(Error::shape(format!(
            "qr expects a square matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let f = QrFactorization::compute(x)?;
    Ok((f.unpack_q(), f.unpack_r()))
}

/// Solves `(H + ridge I) x = rhs` for square `H` via QR.
///
/// With `ridge = 0` this is an exact solve of a nonsingular system; a
/// positive ridge regularizes rank-deficient systems toward the least-norm
/// solution. Returns [`Error::Singular`] with a condition estimate when the
/// shifted system is still singular to working precision.
pub fn solve<T: Scalar>(
    h: &DenseMatrix<T>,
    rhs: &DenseVector<T>,
    ridge: f64,
) -> Result<DenseVector<T>> {
    if !h.is_square() {
        return Err(Error::shape(format!(
            "solve expects a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    if h.rows() != rhs.len() {
        return Err(Error::shape(format!(
            "solve: rhs length {} != {}",
            rhs.len(),
            h.rows()
        )));
    }
    if ridge < 0.0 {
        return Err(Error::Config("ridge must be non-negative".to_string()));
    }
    let mut shifted = h.clone();
    if ridge > 0.0 {
        shifted.shift_diagonal(T::of(ridge));
    }
    QrFactorization::compute(&shifted)?.solve(rhs)
}
