//! Implicit gradients of the principal eigenvector.
//!
//! Two routes are provided. The declarative route differentiates the
//! constrained argmin (trace maximization on the sphere); its gradient is
//! symmetric by construction, since that problem only sees the symmetric
//! part of the input. The fixed-point route differentiates the power
//! iteration map `y = A y / ||A y||` directly and is oriented like the raw
//! right-eigenvector sensitivity.
//!
//! Both have a fast path built on the sparsity of the mixed
//! second-derivative tensor (nothing of size `m^3` is allocated) and a
//! dense materialized path for verification and benchmarking.

use super::solver::{EigResult, IedProblem};
use crate::linalg::QrFactorization;
use crate::{DenseMatrix, DenseVector, Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradMethod {
    Ddn,
    Ift,
}

/// Backward-pass output plus intermediates.
#[derive(Debug, Clone)]
pub struct IedGradients<T> {
    pub dlda: DenseMatrix<T>,
    pub multiplier: T,
    /// Adjoint vector: `K` for the declarative route, the transposed
    /// system solve `H^{-T} dL/dy` for the fixed-point route.
    pub adjoint: DenseVector<T>,
    pub method: GradMethod,
    pub exploited: bool,
}

fn check_solution<T: Scalar>(p: &IedProblem<T>, y: &DenseVector<T>) -> Result<()> {
    if y.len() != p.m() {
        return Err(Error::shape(format!(
            "solution length {} != {}",
            y.len(),
            p.m()
        )));
    }
    if (y.norm() - T::one()).abs() > T::of(1e-4) {
        return Err(Error::Degenerate(
            "backward pass requires a near-unit eigenvector",
        ));
    }
    Ok(())
}

/// Multiplier of the orthonormality constraint:
/// `beta = -0.5 * y^T (A y + A^T y)`. Equals `-lambda` for symmetric `A`
/// with an exact eigenpair.
pub fn lagrange_multiplier<T: Scalar>(p: &IedProblem<T>, y: &DenseVector<T>) -> Result<T> {
    check_solution(p, y)?;
    let ay = p.a().matvec(y);
    let aty = p.a().matvec_t(y);
    Ok(-T::of(0.5) * (y.dot(&ay) + y.dot(&aty)))
}

/// Sparse encoding of the mixed second-derivative tensor of the trace
/// objective: entry `(i, j, k)` equals `-delta_ij y_k - delta_ik y_j`.
#[derive(Debug, Clone)]
pub struct HessianRules<T> {
    y: DenseVector<T>,
}

/// Builds the rule set for a solution vector.
pub fn mixed_hessian_rules<T: Scalar>(y: &DenseVector<T>) -> HessianRules<T> {
    HessianRules { y: y.clone() }
}

impl<T: Scalar> HessianRules<T> {
    pub fn dim(&self) -> usize {
        self.y.len()
    }

    /// Dense tensor in block-row layout (rows `i*m .. (i+1)*m` hold block
    /// `i`); intended for oracle comparison and benchmarking only.
    pub fn materialize(&self) -> DenseMatrix<T> {
        let m = self.dim();
        let mut out = DenseMatrix::zeros(m * m, m);
        for i in 0..m {
            for j in 0..m {
                // entry (i, j, i) -= y_j
                out[(i * m + j, i)] = out[(i * m + j, i)] - self.y[j];
                // entry (i, i, j) -= y_j
                out[(i * m + i, j)] = out[(i * m + i, j)] - self.y[j];
            }
        }
        out
    }

    /// Contraction `sum_i k_i B_i` without materializing anything:
    /// `-k y^T - y k^T`.
    pub fn contract(&self, k: &DenseVector<T>) -> DenseMatrix<T> {
        let neg_k = k.scale(-T::one());
        neg_k.outer(&self.y).add(&self.y.outer(&neg_k))
    }
}

fn ddn_adjoint<T: Scalar>(
    p: &IedProblem<T>,
    y: &DenseVector<T>,
    dldy: &DenseVector<T>,
    ridge: f64,
) -> Result<(DenseVector<T>, T)> {
    let beta = lagrange_multiplier(p, y)?;
    let m = p.m();
    // H = -(A + A^T) - 2 beta I (+ ridge I). With beta = -lambda this is
    // singular along the eigenvector, so a ridge is required; zero means
    // "use the default scale" (kept above working epsilon so the shift
    // survives in f32 too).
    let ridge = if ridge > 0.0 {
        ridge
    } else {
        1e-8f64.max(50.0 * T::epsilon().to_f64()) * p.a().frob_norm().to_f64()
    };
    let mut h = p.a().add(&p.a().transpose()).scale(-T::one());
    for i in 0..m {
        h[(i, i)] = h[(i, i)] - (beta + beta) + T::of(ridge);
    }
    let factors = QrFactorization::compute(&h)?;
    if factors.is_singular() {
        return Err(Error::Singular {
            cond: factors.condition_estimate(),
        });
    }
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

/// Declarative backward pass. With `exploited` the gradient is assembled
/// as `-K y^T - y K^T`; otherwise the tensor is materialized and
/// contracted against the same `K`. The two agree to rounding.
pub fn ddn_backward<T: Scalar>(
    p: &IedProblem<T>,
    eig: &EigResult<T>,
    dldy: &DenseVector<T>,
    exploited: bool,
    ridge: f64,
) -> Result<IedGradients<T>> {
    if !eig.converged {
        return Err(Error::Degenerate(
            "backward pass requires a converged eigenpair",
        ));
    }
    check_solution(p, &eig.y)?;
    if dldy.len() != p.m() {
        return Err(Error::shape(format!(
            "dL/dy length {} != {}",
            dldy.len(),
            p.m()
        )));
    }
    let (k, beta) = ddn_adjoint(p, &eig.y, dldy, ridge)?;
    let rules = mixed_hessian_rules(&eig.y);
    let dlda = if exploited {
        rules.contract(&k)
    } else {
        let m = p.m();
        let tensor = rules.materialize();
        let mut out = DenseMatrix::zeros(m, m);
        for i in 0..m {
            let ki = k[i];
            if ki == T::zero() {
                continue;
            }
            for j in 0..m {
                let row = tensor.row(i * m + j);
                for (kk, b) in row.iter().enumerate() {
                    out[(j, kk)] = out[(j, kk)] + ki * *b;
                }
            }
        }
        out
    };
    Ok(IedGradients {
        dlda,
        multiplier: beta,
        adjoint: k,
        method: GradMethod::Ddn,
        exploited,
    })
}

fn ift_system<T: Scalar>(p: &IedProblem<T>, y: &DenseVector<T>, lambda: T) -> DenseMatrix<T> {
    // H = I - (I - y y^T) A / lambda
    let m = p.m();
    let scaled = p.a().scale(T::one() / lambda);
    let yt_scaled = scaled.matvec_t(y); // row vector y^T (A/lambda)
    let mut h = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let proj = scaled[(i, j)] - y[i] * yt_scaled[j];
            h[(i, j)] = if i == j { T::one() - proj } else { -proj };
        }
    }
    h
}

/// Fixed-point backward pass through `y = A y / ||A y||`: solves
/// `v^T = dL/dy H^{-1}` with `H = I - (I - y y^T) A / lambda`, then
/// assembles `dL/dA = (I - y y^T) v y^T / lambda` without materializing
/// the `m^3` sensitivity tensor. Requires a positive dominant eigenvalue.
pub fn ift_backward<T: Scalar>(
    p: &IedProblem<T>,
    eig: &EigResult<T>,
    dldy: &DenseVector<T>,
) -> Result<IedGradients<T>> {
    if !eig.converged {
        return Err(Error::Degenerate(
            "backward pass requires a converged eigenpair",
        ));
    }
    check_solution(p, &eig.y)?;
    if dldy.len() != p.m() {
        return Err(Error::shape(format!(
            "dL/dy length {} != {}",
            dldy.len(),
            p.m()
        )));
    }
    let lambda = eig.lambda;
    if lambda.to_f64() <= 1e-12 * p.a().frob_norm().to_f64() {
        return Err(Error::InvalidForIft(lambda.to_f64()));
    }
    let y = &eig.y;
    let h = ift_system(p, y, lambda);
    let factors = QrFactorization::compute(&h.transpose())?;
    if factors.is_singular() {
        return Err(Error::Singular {
            cond: factors.condition_estimate(),
        });
    }
    let v = factors.solve(dldy)?;
    let v_tan = v.axpy(-y.dot(&v), y); // (I - y y^T) v
    let dlda = v_tan.outer(y).scale(T::one() / lambda);
    Ok(IedGradients {
        dlda,
        multiplier: -lambda,
        adjoint: v,
        method: GradMethod::Ift,
        exploited: true,
    })
}

/// Dense fixed-point route: materializes both the tensor of the implicit
/// map's input derivative and the full solution sensitivity before
/// contracting with `dL/dy`. Exists for benchmarking and as a slow
/// cross-check of [`ift_backward`]; `byte_budget` caps the two tensors.
pub fn ift_jacobian_backward<T: Scalar>(
    p: &IedProblem<T>,
    eig: &EigResult<T>,
    dldy: &DenseVector<T>,
    byte_budget: Option<u64>,
) -> Result<IedGradients<T>> {
    if !eig.converged {
        return Err(Error::Degenerate(
            "backward pass requires a converged eigenpair",
        ));
    }
    check_solution(p, &eig.y)?;
    let m = p.m();
    // two m^3 tensors plus the dense system, its factorization and inverse
    let needed = (2 * m * m * m + 3 * m * m) as u64 * std::mem::size_of::<T>() as u64;
    if let Some(budget) = byte_budget {
        if needed > budget {
            return Err(Error::ByteBudget { needed, budget });
        }
    }
    let lambda = eig.lambda;
    if lambda.to_f64() <= 1e-12 * p.a().frob_norm().to_f64() {
        return Err(Error::InvalidForIft(lambda.to_f64()));
    }
    let y = &eig.y;
    let h = ift_system(p, y, lambda);
    let factors = QrFactorization::compute(&h)?;
    if factors.is_singular() {
        return Err(Error::Singular {
            cond: factors.condition_estimate(),
        });
    }
    // input-derivative tensor: entry (i, (j, k)) = -P_ij y_k / lambda
    // with P = I - y y^T, in block-row layout
    let inv_lambda = T::one() / lambda;
    let mut b = DenseMatrix::zeros(m * m, m);
    for i in 0..m {
        for j in 0..m {
            let p_ij = if i == j {
                T::one() - y[i] * y[j]
            } else {
                -y[i] * y[j]
            };
            if p_ij == T::zero() {
                continue;
            }
            for k in 0..m {
                b[(i * m + j, k)] = -p_ij * y[k] * inv_lambda;
            }
        }
    }
    // full sensitivity tensor: S = -H^{-1} B, same layout
    let mut h_inv = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let col = factors.solve(&DenseVector::basis(m, j))?;
        for i in 0..m {
            h_inv[(i, j)] = col[i];
        }
    }
    let mut sens = DenseMatrix::zeros(m * m, m);
    for j in 0..m {
        for i in 0..m {
            for l in 0..m {
                let w_il = -h_inv[(i, l)];
                if w_il == T::zero() {
                    continue;
                }
                let brow = b.row(l * m + j);
                let srow = i * m + j;
                for k in 0..m {
                    sens[(srow, k)] = sens[(srow, k)] + w_il * brow[k];
                }
            }
        }
    }
    let mut dlda = DenseMatrix::zeros(m, m);
    for i in 0..m {
        let vi = dldy[i];
        if vi == T::zero() {
            continue;
        }
        for j in 0..m {
            let srow = sens.row(i * m + j);
            for k in 0..m {
                dlda[(j, k)] = dlda[(j, k)] + vi * srow[k];
            }
        }
    }
    Ok(IedGradients {
        dlda,
        multiplier: -lambda,
        adjoint: dldy.clone(),
        method: GradMethod::Ift,
        exploited: false,
    })
}

/// Reverses rows and columns: `out[i][j] = x[m-1-i][m-1-j]`. Applying it
/// twice is the identity. Relates ascending- and descending-order
/// eigendecompositions and their gradients.
pub fn flip_transform<T: Scalar>(x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !x.is_square() {
        return Err(Error::shape(format!(
            "flip transform expects a square matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let m = x.rows();
    let mut out = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = x[(m - 1 - i, m - 1 - j)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ied::solver::{power_iteration, EigMethod, EigOptions, SignMode};

    fn diag_problem(entries: &[f64]) -> IedProblem<f64> {
        let n = entries.len();
        let mut a = DenseMatrix::zeros(n, n);
        for (i, v) in entries.iter().enumerate() {
            a[(i, i)] = *v;
        }
        IedProblem::new(a, true).unwrap()
    }

    fn converged_result(y: DenseVector<f64>, lambda: f64) -> EigResult<f64> {
        EigResult {
            y,
            lambda,
            iterations: 1,
            converged: true,
            method: EigMethod::Pi,
            sign_mode: SignMode::None,
        }
    }

    #[test]
    fn multiplier_is_negative_eigenvalue() {
        let p = diag_problem(&[3.0, 1.0]);
        let y = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        assert_eq!(lagrange_multiplier(&p, &y).unwrap(), -3.0);

        let p = diag_problem(&[1.0, 1.0]);
        let y = DenseVector::from_slice(&[0.6, 0.8]).unwrap();
        assert!((lagrange_multiplier(&p, &y).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn multiplier_matches_rayleigh_on_converged_pair() {
        let mut a = DenseMatrix::zeros(16, 16);
        for i in 0..16 {
            for j in 0..16 {
                a[(i, j)] = ((i * 31 + j * 17 + 3) % 97) as f64 / 97.0;
            }
        }
        let sym = a.add(&a.transpose());
        let p = IedProblem::new(sym, true).unwrap();
        let u0 = DenseVector::from_fn(16, |i| 1.0 + (i as f64) * 0.01);
        let eig = power_iteration(
            &p,
            &u0,
            &EigOptions {
                tol: 1e-12,
                max_iters: 5000,
                ..EigOptions::default()
            },
        )
        .unwrap();
        assert!(eig.converged);
        let beta = lagrange_multiplier(&p, &eig.y).unwrap();
        assert!((beta + eig.lambda).abs() <= 1e-6 * eig.lambda.abs());
    }

    #[test]
    fn hessian_rules_unit_vector() {
        let y = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        let t = mixed_hessian_rules(&y).materialize();
        // nonzeros: (0,0,0) = -2, (1,0,1) = -1, (1,1,0) = -1
        assert_eq!(t[(0, 0)], -2.0); // row 0*2+0, col 0
        assert_eq!(t[(2, 1)], -1.0); // row 1*2+0, col 1
        assert_eq!(t[(3, 0)], -1.0); // row 1*2+1, col 0
        let totalize: f64 = t.data().iter().map(|v| v.abs()).sum();
        assert_eq!(totalize, 4.0);
    }

    #[test]
    fn hessian_rules_general_vector_decomposition() {
        // matches the rank-wise decomposition: B = B0 + B1 with
        // B0[i][(i,k)] = -y_k and B1[i][(j,i)] = -y_j
        let y = DenseVector::from_slice(&[0.6, 0.8]).unwrap();
        let t = mixed_hessian_rules(&y).materialize();
        let m = 2;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let mut expect = 0.0;
                    if i == j {
                        expect -= y[k];
                    }
                    if i == k {
                        expect -= y[j];
                    }
                    assert_eq!(t[(i * m + j, k)], expect);
                }
            }
        }
    }

    #[test]
    fn prop4_combinator() {
        let k = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        let y = DenseVector::from_slice(&[0.0, 1.0]).unwrap();
        let g = mixed_hessian_rules(&y).contract(&k);
        assert_eq!(g[(0, 0)], 0.0);
        assert_eq!(g[(0, 1)], -1.0);
        assert_eq!(g[(1, 0)], -1.0);
        assert_eq!(g[(1, 1)], 0.0);
    }

    #[test]
    fn ddn_zero_loss_gradient() {
        let p = diag_problem(&[2.0, 1.0]);
        let eig = converged_result(DenseVector::from_slice(&[1.0, 0.0]).unwrap(), 2.0);
        let g = ddn_backward(&p, &eig, &DenseVector::zeros(2), true, 0.0).unwrap();
        assert_eq!(g.dlda.max_abs(), 0.0);
    }

    #[test]
    fn ddn_exploited_matches_materialized() {
        let mut a = DenseMatrix::zeros(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                a[(i, j)] = (((i * 13 + j * 7 + 1) % 23) as f64 / 23.0).abs();
            }
        }
        let sym = a.add(&a.transpose());
        let p = IedProblem::new(sym, true).unwrap();
        let u0 = DenseVector::from_fn(8, |i| 1.0 + i as f64 * 0.1);
        let eig = power_iteration(
            &p,
            &u0,
            &EigOptions {
                tol: 1e-13,
                max_iters: 5000,
                ..EigOptions::default()
            },
        )
        .unwrap();
        let dldy = DenseVector::from_fn(8, |i| ((i as f64) - 3.5) / 4.0);
        let fast = ddn_backward(&p, &eig, &dldy, true, 0.0).unwrap();
        let dense = ddn_backward(&p, &eig, &dldy, false, 0.0).unwrap();
        let scale = fast.dlda.max_abs().max(1e-30);
        assert!(fast.dlda.sub(&dense.dlda).max_abs() / scale <= 1e-10);
        // symmetric by construction
        assert_eq!(fast.dlda.sub(&fast.dlda.transpose()).max_abs(), 0.0);
    }

    #[test]
    fn ift_hand_example() {
        let p = diag_problem(&[2.0, 1.0]);
        let eig = converged_result(DenseVector::from_slice(&[1.0, 0.0]).unwrap(), 2.0);
        let dldy = DenseVector::from_slice(&[0.0, 1.0]).unwrap();
        let g = ift_backward(&p, &eig, &dldy).unwrap();
        // H = [[1,0],[0,0.5]], v = (0,2), dL/dA = [[0,0],[1,0]]
        assert!((g.adjoint[1] - 2.0).abs() < 1e-14);
        assert!(g.dlda[(0, 0)].abs() < 1e-14);
        assert!(g.dlda[(0, 1)].abs() < 1e-14);
        assert!((g.dlda[(1, 0)] - 1.0).abs() < 1e-14);
        assert!(g.dlda[(1, 1)].abs() < 1e-14);
    }

    #[test]
    fn ift_zero_loss_and_budget() {
        let p = diag_problem(&[2.0, 1.0]);
        let eig = converged_result(DenseVector::from_slice(&[1.0, 0.0]).unwrap(), 2.0);
        let g = ift_backward(&p, &eig, &DenseVector::zeros(2)).unwrap();
        assert_eq!(g.dlda.max_abs(), 0.0);
        assert!(matches!(
            ift_jacobian_backward(&p, &eig, &DenseVector::zeros(2), Some(1)),
            Err(Error::ByteBudget { .. })
        ));
    }

    #[test]
    fn ift_jacobian_matches_fast_path() {
        let mut a = DenseMatrix::zeros(6, 6);
        for i in 0..6 {
            for j in 0..6 {
                a[(i, j)] = (((i * 11 + j * 5 + 2) % 17) as f64 / 17.0).abs();
            }
        }
        let sym = a.add(&a.transpose());
        let p = IedProblem::new(sym, true).unwrap();
        let u0 = DenseVector::from_fn(6, |i| 1.0 - i as f64 * 0.05);
        let eig = power_iteration(
            &p,
            &u0,
            &EigOptions {
                tol: 1e-13,
                max_iters: 5000,
                ..EigOptions::default()
            },
        )
        .unwrap();
        let dldy = DenseVector::from_fn(6, |i| (i as f64 * 0.3).sin());
        let fast = ift_backward(&p, &eig, &dldy).unwrap();
        let dense = ift_jacobian_backward(&p, &eig, &dldy, None).unwrap();
        let scale = fast.dlda.max_abs().max(1e-30);
        assert!(fast.dlda.sub(&dense.dlda).max_abs() / scale <= 1e-9);
    }

    #[test]
    fn ift_rejects_nonpositive_lambda() {
        let p = diag_problem(&[-2.0, -3.0]);
        let eig = converged_result(DenseVector::from_slice(&[1.0, 0.0]).unwrap(), -2.0);
        let dldy = DenseVector::from_slice(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            ift_backward(&p, &eig, &dldy),
            Err(Error::InvalidForIft(_))
        ));
    }

    #[test]
    fn flip_examples() {
        let x = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let f = flip_transform(&x).unwrap();
        assert_eq!(f.data(), &[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(
            flip_transform(&DenseMatrix::<f64>::identity(3)).unwrap(),
            DenseMatrix::identity(3)
        );
        let back = flip_transform(&f).unwrap();
        assert_eq!(back, x);
        assert!(matches!(
            flip_transform(&DenseMatrix::<f64>::zeros(2, 3)),
            Err(Error::Shape(_))
        ));
    }
}
