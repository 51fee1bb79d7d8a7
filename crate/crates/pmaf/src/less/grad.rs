//! Implicit gradients of the sphere-constrained least-squares solution.
//!
//! With the converged solution `y` of an instance `(A, b)` and an
//! upper-level loss `L(y)`, the backward pass produces `dL/dA` and `dL/db`
//! from a single adjoint vector `K`:
//!
//! - fast path: `dL/dA = (A K) y^T + (A y - b) K^T`, `dL/db = -A K`,
//!   never allocating anything bigger than the problem itself;
//! - materialized path: the mixed second-derivative tensor of the
//!   objective is assembled block by block and contracted against `K`,
//!   kept around for verification and benchmarking.

use super::solver::LessProblem;
use crate::linalg::QrFactorization;
use crate::{DenseMatrix, DenseVector, Error, Result, Scalar};

/// Backward-pass outputs plus the intermediates worth inspecting.
#[derive(Debug, Clone)]
pub struct LessGradients<T> {
    pub dlda: DenseMatrix<T>,
    pub dldb: DenseVector<T>,
    /// Lagrange multiplier of the sphere constraint at `y`.
    pub multiplier: T,
    /// Adjoint vector `K`; `dL/dA` and `dL/db` are linear in it.
    pub adjoint: DenseVector<T>,
}

fn check_feasible<T: Scalar>(y: &DenseVector<T>) -> Result<()> {
    if (y.norm() - T::one()).abs() > T::of(1e-4) {
        return Err(Error::Degenerate(
            "backward pass requires a near-unit solution vector",
        ));
    }
    Ok(())
}

/// Multiplier of the sphere constraint: `0.5 * y^T A^T (A y - b)`.
pub fn lagrange_multiplier<T: Scalar>(p: &LessProblem<T>, y: &DenseVector<T>) -> Result<T> {
    if y.len() != p.n() {
        return Err(Error::shape(format!(
            "solution length {} != {}",
            y.len(),
            p.n()
        )));
    }
    check_feasible(y)?;
    let r = p.a().matvec(y).sub(p.b());
    Ok(T::of(0.5) * y.dot(&p.a().matvec_t(&r)))
}

/// Curvature matrix `H = A^T A - 2 beta I` with a ridge shift applied.
fn curvature<T: Scalar>(p: &LessProblem<T>, beta: T, ridge: f64) -> DenseMatrix<T> {
    let mut h = p.a().gram();
    h.shift_diagonal(T::of(ridge) - (beta + beta));
    h
}

fn factor_with_ridge<T: Scalar>(
    p: &LessProblem<T>,
    beta: T,
    ridge: f64,
) -> Result<(QrFactorization<T>, f64)> {
    let h = curvature(p, beta, ridge);
    match QrFactorization::compute(&h) {
        Ok(f) if !f.is_singular() => Ok((f, ridge)),
        _ => {
            // fall back to a trace-scaled ridge when H is (near) singular
            let n = p.n();
            let trace: f64 = (0..n).map(|i| h[(i, i)].to_f64()).sum::<f64>() - ridge * n as f64;
            let bump = (1e-9 * trace.abs() / n as f64).max(1e-12);
            let ridge = ridge.max(bump);
            let f = QrFactorization::compute(&curvature(p, beta, ridge))?;
            if f.is_singular() {
                return Err(Error::Singular {
                    cond: f.condition_estimate(),
                });
            }
            Ok((f, ridge))
        }
    }
}

/// Adjoint vector `K` of the declarative solution map.
///
/// With the single constraint row `a = 2 y^T`, the general formula
/// collapses to two solves against one factorization of `H` plus a rank-1
/// correction:
/// `K = (2 y^T z / 2 y^T w) w - z`, `w = H^{-1}(2y)`, `z = H^{-1} dL/dy`.
pub fn solution_adjoint<T: Scalar>(
    p: &LessProblem<T>,
    y: &DenseVector<T>,
    dldy: &DenseVector<T>,
    ridge: f64,
) -> Result<(DenseVector<T>, T)> {
    if dldy.len() != p.n() {
        return Err(Error::shape(format!(
            "dL/dy length {} != {}",
            dldy.len(),
            p.n()
        )));
    }
    let beta = lagrange_multiplier(p, y)?;
    let (factors, _) = factor_with_ridge(p, beta, ridge)?;
    let two_y = y.scale(T::of(2.0));
    let w = factors.solve(&two_y)?;
    let s = two_y.dot(&w);
    if s == T::zero() {
        return Err(Error::Degenerate(
            "constraint row annihilated by the curvature inverse",
        ));
    }
    let z = factors.solve(dldy)?;
    let c = two_y.dot(&z);
    Ok((w.scale(c / s).sub(&z), beta))
}

/// Mixed second-derivative tensor of the objective with respect to `(A, y)`
/// in block-row layout: rows `i*m .. (i+1)*m` hold block `i`, an `m x n`
/// matrix equal to `A[:, i] y^T` with the residual `A y - b` added to its
/// `i`-th column.
pub fn mixed_hessian_blocks<T: Scalar>(
    p: &LessProblem<T>,
    y: &DenseVector<T>,
) -> Result<DenseMatrix<T>> {
    if y.len() != p.n() {
        return Err(Error::shape(format!(
            "solution length {} != {}",
            y.len(),
            p.n()
        )));
    }
    let (m, n) = (p.m(), p.n());
    let r = p.a().matvec(y).sub(p.b());
    let mut blocks = DenseMatrix::zeros(n * m, n);
    for i in 0..n {
        for j in 0..m {
            let aji = p.a()[(j, i)];
            let row = i * m + j;
            for k in 0..n {
                blocks[(row, k)] = aji * y[k];
            }
            blocks[(row, i)] = blocks[(row, i)] + r[j];
        }
    }
    Ok(blocks)
}

/// Full backward pass. `materialize` selects between the structure-
/// exploiting accumulation and the contraction against the materialized
/// tensor; both produce the same gradients.
pub fn backward<T: Scalar>(
    p: &LessProblem<T>,
    y: &DenseVector<T>,
    dldy: &DenseVector<T>,
    materialize: bool,
    ridge: f64,
) -> Result<LessGradients<T>> {
    let (k, beta) = solution_adjoint(p, y, dldy, ridge)?;
    let (m, n) = (p.m(), p.n());
    let ak = p.a().matvec(&k);
    let dldb = ak.scale(-T::one());
    let dlda = if materialize {
        let blocks = mixed_hessian_blocks(p, y)?;
        let mut out = DenseMatrix::zeros(m, n);
        for i in 0..n {
            let ki = k[i];
            if ki == T::zero() {
                continue;
            }
            for j in 0..m {
                let brow = blocks.row(i * m + j);
                for (kk, b) in brow.iter().enumerate() {
                    out[(j, kk)] = out[(j, kk)] + ki * *b;
                }
            }
        }
        out
    } else {
        let r = p.a().matvec(y).sub(p.b());
        ak.outer(y).add(&r.outer(&k))
    };
    Ok(LessGradients {
        dlda,
        dldb,
        multiplier: beta,
        adjoint: k,
    })
}

/// Dense reference route: materializes the full sensitivity tensor
/// `dy/dA` (an `n x (m*n)` matrix) and contracts it with `dL/dy`. This is
/// what differentiating the layer without any exploited structure costs;
/// it exists for benchmarking and as a slow cross-check of [`backward`].
///
/// `byte_budget` caps the transient tensor allocations; exceeding it
/// returns [`Error::ByteBudget`].
pub fn jacobian_backward<T: Scalar>(
    p: &LessProblem<T>,
    y: &DenseVector<T>,
    dldy: &DenseVector<T>,
    ridge: f64,
    byte_budget: Option<u64>,
) -> Result<LessGradients<T>> {
    let (m, n) = (p.m(), p.n());
    // tensor of the mixed second derivative, the sensitivity tensor, and
    // the dense n x n maps applied to them
    let needed = (2 * n * m * n + 3 * n * n) as u64 * std::mem::size_of::<T>() as u64;
    if let Some(budget) = byte_budget {
        if needed > budget {
            return Err(Error::ByteBudget { needed, budget });
        }
    }
    let beta = lagrange_multiplier(p, y)?;
    let (factors, _) = factor_with_ridge(p, beta, ridge)?;

    // Dense n x n map applied to every tensor column:
    // M = (H^{-1} a^T (a H^{-1} a^T)^{-1} a - I) H^{-1}, a = 2 y^T.
    let two_y = y.scale(T::of(2.0));
    let w = factors.solve(&two_y)?;
    let s = two_y.dot(&w);
    if s == T::zero() {
        return Err(Error::Degenerate(
            "constraint row annihilated by the curvature inverse",
        ));
    }
    let mut h_inv = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let col = factors.solve(&DenseVector::basis(n, j))?;
        for i in 0..n {
            h_inv[(i, j)] = col[i];
        }
    }
    let mut proj = w.outer(&two_y).scale(T::one() / s);
    proj.shift_diagonal(-T::one());
    let map = proj.matmul(&h_inv);

    let blocks = mixed_hessian_blocks(p, y)?;
    // sensitivity tensor in the same block-row layout as `blocks`
    let mut sens = DenseMatrix::zeros(n * m, n);
    for j in 0..m {
        for i in 0..n {
            for l in 0..n {
                let w_il = map[(i, l)];
                if w_il == T::zero() {
                    continue;
                }
                let brow = blocks.row(l * m + j);
                let srow = i * m + j;
                for k in 0..n {
                    sens[(srow, k)] = sens[(srow, k)] + w_il * brow[k];
                }
            }
        }
    }
    let mut dlda = DenseMatrix::zeros(m, n);
    for i in 0..n {
        let vi = dldy[i];
        if vi == T::zero() {
            continue;
        }
        for j in 0..m {
            let srow = sens.row(i * m + j);
            for k in 0..n {
                dlda[(j, k)] = dlda[(j, k)] + vi * srow[k];
            }
        }
    }
    // dL/db through the dense map: K^T = dldy^T M, dL/db = -A K
    let mut k = DenseVector::zeros(n);
    for i in 0..n {
        let vi = dldy[i];
        if vi == T::zero() {
            continue;
        }
        for l in 0..n {
            k[l] = k[l] + vi * map[(i, l)];
        }
    }
    let dldb = p.a().matvec(&k).scale(-T::one());
    Ok(LessGradients {
        dlda,
        dldb,
        multiplier: beta,
        adjoint: k,
    })
}
