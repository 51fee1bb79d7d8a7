//! Independent oracles: everything here recomputes quantities by a
//! different route than the implementation under test.

use crate::eval::sampling::seeded_unit_vector;
use crate::ied::IedProblem;
use crate::less::{self, BlsMode, LessConfig, LessProblem};
use crate::linalg::{solve as linsolve, QrFactorization};
use crate::{DenseMatrix, DenseVector, Error, Result, Scalar};

/// Central finite differences of a scalar loss over every matrix entry.
/// The loss is re-evaluated `2 m n` times; any non-finite evaluation is
/// reported with the offending entry.
pub fn finite_diff_matrix<F>(
    mut loss: F,
    x0: &DenseMatrix<f64>,
    step: f64,
) -> Result<DenseMatrix<f64>>
where
    F: FnMut(&DenseMatrix<f64>) -> Result<f64>,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut grad = DenseMatrix::zeros(x0.rows(), x0.cols());
    let mut x = x0.clone();
    for i in 0..x0.rows() {
        for j in 0..x0.cols() {
            let base = x[(i, j)];
            x[(i, j)] = base + step;
            let plus = loss(&x)?;
            x[(i, j)] = base - step;
            let minus = loss(&x)?;
            x[(i, j)] = base;
            let d = (plus - minus) / (2.0 * step);
            if !d.is_finite() {
                return Err(Error::OracleFailure(i, j));
            }
            grad[(i, j)] = d;
        }
    }
    Ok(grad)
}

/// Central finite differences over a vector input.
pub fn finite_diff_vector<F>(
    mut loss: F,
    x0: &DenseVector<f64>,
    step: f64,
) -> Result<DenseVector<f64>>
where
    F: FnMut(&DenseVector<f64>) -> Result<f64>,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut grad = DenseVector::zeros(x0.len());
    let mut x = x0.clone();
    for i in 0..x0.len() {
        let base = x[i];
        x[i] = base + step;
        let plus = loss(&x)?;
        x[i] = base - step;
        let minus = loss(&x)?;
        x[i] = base;
        let d = (plus - minus) / (2.0 * step);
        if !d.is_finite() {
            return Err(Error::OracleFailure(i, 0));
        }
        grad[i] = d;
    }
    Ok(grad)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Sweeps run
/// until the off-diagonal norm falls below `50 * eps * ||A||_F` (or 60
/// sweeps). Returns eigenvalues and the matching orthonormal columns.
pub fn jacobi_eigh<T: Scalar>(a: &DenseMatrix<T>) -> Result<(DenseVector<T>, DenseMatrix<T>)> {
    if !a.is_square() {
        return Err(Error::shape(format!(
            "jacobi expects a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let m = a.rows();
    let mut w = a.clone();
    let mut v = DenseMatrix::<T>::identity(m);
    let threshold = T::of(50.0) * T::epsilon() * a.frob_norm().max(T::min_positive_value());
    for _sweep in 0..60 {
        let mut off = T::zero();
        for i in 0..m {
            for j in (i + 1)..m {
                off = off + w[(i, j)] * w[(i, j)];
            }
        }
        if (off + off).sqrt() <= threshold {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = w[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = w[(p, p)];
                let aqq = w[(q, q)];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                // stable tangent of the rotation angle
                let t = {
                    let s = if theta >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    s / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..m {
                    let wkp = w[(k, p)];
                    let wkq = w[(k, q)];
                    w[(k, p)] = c * wkp - s * wkq;
                    w[(k, q)] = s * wkp + c * wkq;
                }
                for k in 0..m {
                    let wpk = w[(p, k)];
                    let wqk = w[(q, k)];
                    w[(p, k)] = c * wpk - s * wqk;
                    w[(q, k)] = s * wpk + c * wqk;
                }
                for k in 0..m {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = DenseVector::from_fn(m, |i| w[(i, i)]);
    Ok((values, v))
}

/// Reference dominant eigenpair. Symmetric problems go through cyclic
/// Jacobi (largest eigenvalue); nonsymmetric ones through a long
/// high-precision power iteration, failing with
/// [`Error::OracleUnavailable`] when that does not settle (complex
/// dominant pair).
pub fn reference_eig<T: Scalar>(p: &IedProblem<T>) -> Result<(T, DenseVector<T>)> {
    if p.symmetric_hint() {
        let (values, vectors) = jacobi_eigh(p.a())?;
        let mut j_star = 0;
        for j in 1..p.m() {
            if values[j] > values[j_star] {
                j_star = j;
            }
        }
        let col = vectors.col(j_star);
        let y = col.scale(T::one() / col.norm());
        return Ok((values[j_star], y));
    }
    // nonsymmetric: long-run power iteration at working precision
    let opts = crate::ied::EigOptions::<T> {
        tol: (T::epsilon().to_f64() * 100.0).max(1e-13),
        max_iters: 100_000,
        ..Default::default()
    };
    let u0 = seeded_unit_vector::<T>(p.m(), 0x5eed);
    let eig = crate::ied::power_iteration(p, &u0, &opts)?;
    if !eig.converged {
        return Err(Error::OracleUnavailable(
            "power iteration did not settle; dominant pair may be complex".to_string(),
        ));
    }
    Ok((eig.lambda, eig.y))
}

/// Newton polish of the stationarity system
/// `[A^T(A y - b) - 2 beta y ; y^T y - 1] = 0`, warm-started at `y0`.
/// Converges quadratically to the critical point on `y0`'s branch; used
/// to push solver output to machine precision before finite-difference
/// comparisons.
pub fn kkt_polish(
    p: &LessProblem<f64>,
    y0: &DenseVector<f64>,
    max_steps: usize,
) -> Result<DenseVector<f64>> {
    let n = p.n();
    let gram = p.a().gram();
    let atb = p.a().matvec_t(p.b());
    let mut y = y0.scale(1.0 / y0.norm());
    let mut beta = 0.5 * y.dot(&gram.matvec(&y).sub(&atb));
    for _ in 0..max_steps {
        let grad = gram.matvec(&y).sub(&atb);
        let f1 = grad.axpy(-2.0 * beta, &y);
        let f2 = y.dot(&y) - 1.0;
        if f1.norm() + f2.abs() < 1e-14 {
            break;
        }
        let mut jac = DenseMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = gram[(i, j)];
            }
            jac[(i, i)] -= 2.0 * beta;
            jac[(i, n)] = -2.0 * y[i];
            jac[(n, i)] = 2.0 * y[i];
        }
        let mut rhs = DenseVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = -f1[i];
        }
        rhs[n] = -f2;
        let delta = linsolve(&jac, &rhs, 0.0)?;
        for i in 0..n {
            y[i] += delta[i];
        }
        beta += delta[n];
    }
    Ok(y)
}

const GRID_POINTS: usize = 10_000;

/// Global reference for `n = 2`: a 10^4-point angle grid followed by
/// golden-section refinement of the bracketing interval down to 1e-12.
fn reference_less_grid(p: &LessProblem<f64>) -> (DenseVector<f64>, f64) {
    let f = |theta: f64| -> f64 {
        let u = DenseVector::from_vec(vec![theta.cos(), theta.sin()]).expect("finite");
        less::objective(p, &u).expect("shapes fixed")
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut best_i = 0usize;
    let mut best_f = f64::INFINITY;
    for i in 0..GRID_POINTS {
        let v = f(two_pi * i as f64 / GRID_POINTS as f64);
        if v < best_f {
            best_f = v;
            best_i = i;
        }
    }
    let center = two_pi * best_i as f64 / GRID_POINTS as f64;
    let mut lo = center - two_pi / GRID_POINTS as f64;
    let mut hi = center + two_pi / GRID_POINTS as f64;
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - gr * (hi - lo);
    let mut d = lo + gr * (hi - lo);
    while hi - lo > 1e-12 {
        if f(c) < f(d) {
            hi = d;
            d = c;
            c = hi - gr * (hi - lo);
        } else {
            lo = c;
            c = d;
            d = lo + gr * (hi - lo);
        }
    }
    let theta = 0.5 * (lo + hi);
    let y = DenseVector::from_vec(vec![theta.cos(), theta.sin()]).expect("finite");
    let fpd = p.a().matvec(&y).sub(p.b()).norm();
    (y, fpd)
}

/// High-precision reference solution and its fixed-point distance.
///
/// `n = 2` uses the globally optimal angle-grid route. Larger problems run
/// the tangent-projected solver with weight decay at tolerance 1e-12 from
/// the default initialization plus 7 seeded restarts, keep the best
/// objective, and Newton-polish the result.
pub fn reference_less(p: &LessProblem<f64>) -> Result<(DenseVector<f64>, f64)> {
    if p.n() == 2 {
        return Ok(reference_less_grid(p));
    }
    let cfg = LessConfig {
        use_rm: true,
        use_twd: true,
        bls: BlsMode::Off,
        tol: 1e-12,
        max_iters: 10_000,
        ..LessConfig::default()
    };
    let mut best: Option<(f64, DenseVector<f64>)> = None;
    for restart in 0..8 {
        let result = if restart == 0 {
            less::solve(p, &cfg)?
        } else {
            let start = seeded_unit_vector::<f64>(p.n(), 0xbead + restart as u64);
            less::solve_from(p, &cfg, &start)?
        };
        let polished = kkt_polish(p, &result.y, 50)?;
        let obj = less::objective(p, &polished)?;
        if best.as_ref().map_or(true, |(b, _)| obj < *b) {
            best = Some((obj, polished));
        }
    }
    let (_, y) = best.expect("at least one restart");
    let fpd = p.a().matvec(&y).sub(p.b()).norm();
    Ok((y, fpd))
}

const BRUTE_FORCE_CAP: usize = 16;

/// Mixed second-derivative tensor of the sphere least-squares objective
/// assembled by central differences of the analytic solution gradient
/// `A -> A^T (A y - b)` against every entry of `A`. The dependence is
/// quadratic per entry, so central differences are exact up to rounding.
/// Output layout matches [`crate::less::mixed_hessian_blocks`].
pub fn brute_force_less_hessian(
    p: &LessProblem<f64>,
    y: &DenseVector<f64>,
) -> Result<DenseMatrix<f64>> {
    let (m, n) = (p.m(), p.n());
    if m > BRUTE_FORCE_CAP || n > BRUTE_FORCE_CAP {
        return Err(Error::SizeCap {
            got: m.max(n),
            cap: BRUTE_FORCE_CAP,
        });
    }
    let h = 1e-3;
    let mut out = DenseMatrix::zeros(n * m, n);
    let mut a = p.a().clone();
    for j in 0..m {
        for k in 0..n {
            let base = a[(j, k)];
            a[(j, k)] = base + h;
            let plus = a.matvec_t(&a.matvec(y).sub(p.b()));
            a[(j, k)] = base - h;
            let minus = a.matvec_t(&a.matvec(y).sub(p.b()));
            a[(j, k)] = base;
            for i in 0..n {
                out[(i * m + j, k)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
    }
    Ok(out)
}

/// Mixed second-derivative tensor of the trace objective assembled by
/// central differences of `A -> -(A + A^T) y` (linear per entry, so the
/// differences are exact up to rounding). Output layout matches
/// [`crate::ied::HessianRules::materialize`].
pub fn brute_force_ied_hessian(
    a0: &DenseMatrix<f64>,
    y: &DenseVector<f64>,
) -> Result<DenseMatrix<f64>> {
    if !a0.is_square() {
        return Err(Error::shape("square matrix required".to_string()));
    }
    let m = a0.rows();
    if m > BRUTE_FORCE_CAP {
        return Err(Error::SizeCap {
            got: m,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let h = 1e-3;
    let grad_y = |a: &DenseMatrix<f64>| -> DenseVector<f64> {
        a.matvec(y).add(&a.matvec_t(y)).scale(-1.0)
    };
    let mut out = DenseMatrix::zeros(m * m, m);
    let mut a = a0.clone();
    for j in 0..m {
        for k in 0..m {
            let base = a[(j, k)];
            a[(j, k)] = base + h;
            let plus = grad_y(&a);
            a[(j, k)] = base - h;
            let minus = grad_y(&a);
            a[(j, k)] = base;
            for i in 0..m {
                out[(i * m + j, k)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::sampling::{sample_matrix, Dist, SampleSpec};

    #[test]
    fn finite_diff_linear_loss() {
        let x0 = DenseMatrix::<f64>::zeros(2, 3);
        let g = finite_diff_matrix(
            |x| Ok(x.data().iter().sum::<f64>()),
            &x0,
            0.5,
        )
        .unwrap();
        for v in g.data() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_diff_quadratic_is_exact() {
        let x0 = DenseMatrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]).unwrap();
        let g = finite_diff_matrix(
            |x| Ok(0.5 * x.data().iter().map(|v| v * v).sum::<f64>()),
            &x0,
            1e-3,
        )
        .unwrap();
        assert!(g.sub(&x0).max_abs() < 1e-10);
    }

    #[test]
    fn finite_diff_quartic_halving_quarters_error() {
        // the truncation error of central differences is O(step^2); a
        // quartic has a nonzero third derivative so the rate is visible
        let x0 = DenseMatrix::from_rows(&[&[1.2, -0.7], &[0.9, 1.7]]).unwrap();
        let quartic =
            |x: &DenseMatrix<f64>| -> Result<f64> { Ok(x.data().iter().map(|v| v.powi(4)).sum()) };
        let exact = DenseMatrix::from_vec(
            2,
            2,
            x0.data().iter().map(|v| 4.0 * v.powi(3)).collect(),
        )
        .unwrap();
        let err_h = finite_diff_matrix(quartic, &x0, 1e-3)
            .unwrap()
            .sub(&exact)
            .max_abs();
        let err_h2 = finite_diff_matrix(quartic, &x0, 5e-4)
            .unwrap()
            .sub(&exact)
            .max_abs();
        let ratio = err_h / err_h2;
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn finite_diff_reports_nan_entry() {
        let x0 = DenseMatrix::<f64>::zeros(2, 2);
        let r = finite_diff_matrix(
            |x| {
                if x[(1, 0)] > 0.0 {
                    Ok(f64::NAN)
                } else {
                    Ok(0.0)
                }
            },
            &x0,
            1e-3,
        );
        match r {
            Err(Error::OracleFailure(1, 0)) => {}
            other => panic!("expected oracle failure at (1,0), got {other:?}"),
        }
    }

    #[test]
    fn jacobi_small_closed_forms() {
        let a = DenseMatrix::from_rows(&[&[5.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 1.0]])
            .unwrap();
        let p = IedProblem::new(a, true).unwrap();
        let (lam, y) = reference_eig(&p).unwrap();
        assert!((lam - 5.0).abs() < 1e-12);
        assert!((y[0].abs() - 1.0).abs() < 1e-12);

        let a = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let p = IedProblem::new(a, true).unwrap();
        let (lam, y) = reference_eig(&p).unwrap();
        assert!((lam - 3.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((y[0].abs() - h).abs() < 1e-10 && (y[1].abs() - h).abs() < 1e-10);
    }

    #[test]
    fn jacobi_residual_bound_random_symmetric() {
        let a: DenseMatrix<f64> = sample_matrix(&SampleSpec {
            dist: Dist::Gaussian01,
            m: 64,
            n: 64,
            symmetric: true,
            absolute: true,
            seed: 77,
        });
        let p = IedProblem::new(a.clone(), true).unwrap();
        let (lam, y) = reference_eig(&p).unwrap();
        let resid = a.matvec(&y).sub(&y.scale(lam)).norm();
        assert!(resid <= 1e-10 * a.frob_norm(), "residual {resid}");
    }

    #[test]
    fn reference_less_trivial_cases() {
        let p = LessProblem::new(
            DenseMatrix::identity(2),
            DenseVector::from_slice(&[2.0, 0.0]).unwrap(),
        )
        .unwrap();
        let (y, fpd) = reference_less(&p).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9);
        assert!((fpd - 1.0).abs() < 1e-12);

        // diag(1,2) with b = 0: optimum is +-e1 with fpd 1
        let p = LessProblem::new(
            DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap(),
            DenseVector::zeros(2),
        )
        .unwrap();
        let (y, fpd) = reference_less(&p).unwrap();
        assert!((y[0].abs() - 1.0).abs() < 1e-9);
        assert!((fpd - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reference_less_grid_stable_under_refinement() {
        let p = LessProblem::new(
            DenseMatrix::from_rows(&[&[0.569525, -1.254572], &[0.414020, 0.124439]]).unwrap(),
            DenseVector::from_slice(&[-1.583332, -0.286124]).unwrap(),
        )
        .unwrap();
        let (_, fpd) = reference_less(&p).unwrap();
        // doubling the grid is emulated by comparing against the polished
        // stationary point reached from the grid optimum
        let (y, _) = reference_less(&p).unwrap();
        let polished = kkt_polish(&p, &y, 50).unwrap();
        let fpd_polished = p.a().matvec(&polished).sub(p.b()).norm();
        assert!((fpd - fpd_polished).abs() <= 1e-9);
    }

    #[test]
    fn brute_force_cap() {
        let p = LessProblem::new(DenseMatrix::<f64>::identity(32), DenseVector::zeros(32))
            .unwrap();
        let y = DenseVector::basis(32, 0);
        assert!(matches!(
            brute_force_less_hessian(&p, &y),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn brute_force_less_identity_example() {
        let p = LessProblem::new(DenseMatrix::identity(2), DenseVector::zeros(2)).unwrap();
        let y = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        let t = brute_force_less_hessian(&p, &y).unwrap();
        let exploited = crate::less::mixed_hessian_blocks(&p, &y).unwrap();
        assert!(t.sub(&exploited).max_abs() <= 1e-10);
        assert_eq!(t.row(0), &[2.0, 0.0]);
    }

    #[test]
    fn brute_force_ied_unit_example() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let y = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        let t = brute_force_ied_hessian(&a, &y).unwrap();
        let rules = crate::ied::mixed_hessian_rules(&y).materialize();
        assert!(t.sub(&rules).max_abs() <= 1e-10);
    }
}
