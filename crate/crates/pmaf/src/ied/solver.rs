//! Iterative solvers for the principal eigenpair.

use crate::linalg::QrFactorization;
use crate::{DenseMatrix, DenseVector, Error, Result, Scalar};
use serde::{Deserialize, Serialize};

/// Square eigen-decomposition instance. `symmetric_hint` asserts (and is
/// validated to mean) that the matrix is symmetric to working precision.
#[derive(Debug, Clone)]
pub struct IedProblem<T> {
    a: DenseMatrix<T>,
    symmetric_hint: bool,
}

impl<T: Scalar> IedProblem<T> {
    pub fn new(a: DenseMatrix<T>, symmetric_hint: bool) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::shape(format!(
                "eigen problem requires a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if a.rows() == 0 {
            return Err(Error::shape("empty matrix".to_string()));
        }
        if !a.is_all_finite() {
            return Err(Error::NonFinite("problem data"));
        }
        if symmetric_hint {
            let dev = a.sub(&a.transpose()).frob_norm();
            if dev > T::of(1e-8) * a.frob_norm() {
                return Err(Error::Degenerate("matrix is not symmetric to tolerance"));
            }
        }
        Ok(Self { a, symmetric_hint })
    }

    pub fn a(&self) -> &DenseMatrix<T> {
        &self.a
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn symmetric_hint(&self) -> bool {
        self.symmetric_hint
    }

    pub fn cast<S: Scalar>(&self) -> IedProblem<S> {
        IedProblem {
            a: self.a.cast(),
            symmetric_hint: self.symmetric_hint,
        }
    }
}

/// How the sign ambiguity of the eigenvector is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignMode {
    /// Leave the sign wherever the iteration lands.
    None,
    /// Align every iterate with its predecessor.
    Historical,
    /// Align the final vector with a fixed reference direction.
    HardCoded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigMethod {
    Pi,
    Si,
}

/// Solver options shared by power iteration and simultaneous iteration.
#[derive(Debug, Clone)]
pub struct EigOptions<T> {
    pub tol: f64,
    pub max_iters: usize,
    pub sign_mode: SignMode,
    /// Reference direction for [`SignMode::HardCoded`]; defaults to the
    /// normalized all-ones vector.
    pub reference: Option<DenseVector<T>>,
    /// When false the solver always runs `max_iters` iterations, which
    /// reproduces fixed-iteration-count runs.
    pub early_stop: bool,
}

impl<T: Scalar> Default for EigOptions<T> {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: 300,
            sign_mode: SignMode::None,
            reference: None,
            early_stop: true,
        }
    }
}

/// Principal eigenpair with convergence metadata.
#[derive(Debug, Clone)]
pub struct EigResult<T> {
    pub y: DenseVector<T>,
    pub lambda: T,
    pub iterations: usize,
    pub converged: bool,
    pub method: EigMethod,
    pub sign_mode: SignMode,
}

/// `V(a, b)`: the sign of `a^T b` when the two vectors are not (nearly)
/// orthogonal, and `+1` otherwise.
pub fn sign_consistency<T: Scalar>(a: &DenseVector<T>, b: &DenseVector<T>) -> T {
    let dot = a.dot(b);
    if dot.abs() > T::of(1e-12) * a.norm() * b.norm() {
        if dot < T::zero() {
            -T::one()
        } else {
            T::one()
        }
    } else {
        T::one()
    }
}

fn hardcoded_reference<T: Scalar>(m: usize, opts: &EigOptions<T>) -> DenseVector<T> {
    match &opts.reference {
        Some(r) => r.clone(),
        None => {
            let s = T::one() / T::of(m as f64).sqrt();
            DenseVector::from_fn(m, |_| s)
        }
    }
}

/// Power iteration `u <- A u / ||A u||` from `u0`.
///
/// Converges when consecutive iterates differ by at most `tol`; without
/// convergence the iterate with the smallest step change is returned with
/// `converged = false`. `lambda` is always the Rayleigh quotient of the
/// returned vector.
pub fn power_iteration<T: Scalar>(
    p: &IedProblem<T>,
    u0: &DenseVector<T>,
    opts: &EigOptions<T>,
) -> Result<EigResult<T>> {
    if u0.len() != p.m() {
        return Err(Error::shape(format!(
            "initial vector length {} != {}",
            u0.len(),
            p.m()
        )));
    }
    if u0.norm() == T::zero() {
        return Err(Error::Degenerate("power iteration from the zero vector"));
    }
    let tol = T::of(opts.tol);
    let mut u = u0.scale(T::one() / u0.norm());
    let mut best = u.clone();
    let mut best_delta = T::infinity();
    let mut last_delta = T::infinity();
    let mut converged = false;
    let mut iterations = 0;
    for t in 0..opts.max_iters {
        let w = p.a.matvec(&u);
        let norm = w.norm();
        if norm == T::zero() {
            return Err(Error::ZeroImage);
        }
        let mut next = w.scale(T::one() / norm);
        if opts.sign_mode == SignMode::Historical {
            let v = sign_consistency(&next, &u);
            if v < T::zero() {
                next = next.scale(v);
            }
        }
        let delta = next.sub(&u).norm();
        u = next;
        iterations = t + 1;
        last_delta = delta;
        if delta <= best_delta {
            best_delta = delta;
            best = u.clone();
        }
        if opts.early_stop && delta <= tol {
            converged = true;
            break;
        }
    }
    if !opts.early_stop {
        converged = last_delta <= tol;
    }
    let mut y = if converged { u } else { best };
    if opts.sign_mode == SignMode::HardCoded {
        let r = hardcoded_reference(p.m(), opts);
        let v = sign_consistency(&y, &r);
        if v < T::zero() {
            y = y.scale(v);
        }
    }
    let lambda = y.dot(&p.a.matvec(&y));
    Ok(EigResult {
        y,
        lambda,
        iterations,
        converged,
        method: EigMethod::Pi,
        sign_mode: opts.sign_mode,
    })
}

/// Simultaneous (orthogonal) iteration: factor `x_t = Q_t R_t`, advance
/// `x_{t+1} = A Q_t` from `x_0 = A`, and read the principal pair off the
/// column of `Q` matching the largest diagonal entry of `R`.
///
/// Convergence requires both the largest diagonal of `R` and the
/// extracted column (after sign alignment) to settle within `tol`.
pub fn simultaneous_iteration<T: Scalar>(
    p: &IedProblem<T>,
    opts: &EigOptions<T>,
) -> Result<EigResult<T>> {
    let m = p.m();
    let tol = T::of(opts.tol);
    let mut x = p.a.clone();
    let mut prev: Option<(T, DenseVector<T>)> = None;
    let mut prev_q: Option<DenseMatrix<T>> = None;
    let mut best: Option<(T, DenseVector<T>)> = None;
    let mut best_change = T::infinity();
    let mut last_change = T::infinity();
    let mut converged = false;
    let mut iterations = 0;
    for t in 0..opts.max_iters {
        let factors = QrFactorization::compute(&x)?;
        let mut q = factors.unpack_q();
        let r = factors.unpack_r();
        if opts.sign_mode == SignMode::Historical {
            if let Some(pq) = &prev_q {
                // align each column with its predecessor (diagonal of Q^T Q_prev)
                for j in 0..m {
                    let col = q.col(j);
                    if sign_consistency(&col, &pq.col(j)) < T::zero() {
                        for i in 0..m {
                            q[(i, j)] = -q[(i, j)];
                        }
                    }
                }
            }
        }
        let mut j_star = 0;
        for j in 1..m {
            if r[(j, j)] > r[(j_star, j_star)] {
                j_star = j;
            }
        }
        let lambda = r[(j_star, j_star)];
        let col = q.col(j_star);
        let col = col.scale(T::one() / col.norm());
        iterations = t + 1;
        if let Some((pl, pc)) = &prev {
            let aligned = if sign_consistency(&col, pc) < T::zero() {
                col.scale(-T::one())
            } else {
                col.clone()
            };
            let change = (lambda - *pl).abs().max(aligned.sub(pc).norm());
            last_change = change;
            if change <= best_change {
                best_change = change;
                best = Some((lambda, col.clone()));
            }
            if opts.early_stop && (lambda - *pl).abs() <= tol && aligned.sub(pc).norm() <= tol {
                prev = Some((lambda, col));
                converged = true;
                break;
            }
        }
        prev = Some((lambda, col));
        prev_q = Some(q.clone());
        x = p.a.matmul(&q);
    }
    if !opts.early_stop {
        converged = last_change <= tol;
    }
    let (lambda, mut y) = if converged {
        prev.expect("at least one iteration")
    } else {
        best.or(prev).expect("at least one iteration")
    };
    if opts.sign_mode == SignMode::HardCoded {
        let r = hardcoded_reference(m, opts);
        let v = sign_consistency(&y, &r);
        if v < T::zero() {
            y = y.scale(v);
        }
    }
    Ok(EigResult {
        y,
        lambda,
        iterations,
        converged,
        method: EigMethod::Si,
        sign_mode: opts.sign_mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(entries: &[f64]) -> IedProblem<f64> {
        let n = entries.len();
        let mut a = DenseMatrix::zeros(n, n);
        for (i, v) in entries.iter().enumerate() {
            a[(i, i)] = *v;
        }
        IedProblem::new(a, true).unwrap()
    }

    #[test]
    fn sign_consistency_examples() {
        let e1 = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        let neg = DenseVector::from_slice(&[-1.0, 0.0]).unwrap();
        let orth = DenseVector::from_slice(&[0.0, 1.0]).unwrap();
        let same = DenseVector::from_slice(&[0.5, 0.0]).unwrap();
        assert_eq!(sign_consistency(&e1, &neg), -1.0);
        assert_eq!(sign_consistency(&e1, &orth), 1.0);
        assert_eq!(sign_consistency(&e1, &same), 1.0);
    }

    #[test]
    fn power_iteration_diagonal() {
        let p = diag(&[2.0, 1.0]);
        let u0 = DenseVector::from_slice(&[std::f64::consts::FRAC_1_SQRT_2; 2]).unwrap();
        // first update: (2,1)/sqrt(5)
        let one = power_iteration(
            &p,
            &u0,
            &EigOptions {
                max_iters: 1,
                early_stop: false,
                ..EigOptions::default()
            },
        )
        .unwrap();
        let s5 = 5.0f64.sqrt();
        assert!((one.y[0] - 2.0 / s5).abs() < 1e-15);
        assert!((one.y[1] - 1.0 / s5).abs() < 1e-15);

        let r = power_iteration(&p, &u0, &EigOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.lambda - 2.0).abs() < 1e-6);
        assert!(r.y[0].abs() > 0.999);
    }

    #[test]
    fn power_iteration_identity_fixed_point() {
        let p = diag(&[1.0, 1.0, 1.0]);
        let u0 = DenseVector::from_slice(&[0.6, 0.0, 0.8]).unwrap();
        let r = power_iteration(&p, &u0, &EigOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!((r.lambda - 1.0).abs() < 1e-12);
        assert!((r.y[0] - 0.6).abs() < 1e-12 && (r.y[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_zero_image() {
        let p = IedProblem::new(DenseMatrix::zeros(2, 2), true).unwrap();
        let u0 = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            power_iteration(&p, &u0, &EigOptions::default()),
            Err(Error::ZeroImage)
        ));
    }

    #[test]
    fn historical_sign_mode_stabilizes_negative_dominant() {
        // dominant eigenvalue -2: plain PI oscillates, historical locks it
        let p = diag(&[-2.0, 1.0]);
        let u0 = DenseVector::from_slice(&[0.9, 0.4]).unwrap();
        let plain = power_iteration(&p, &u0, &EigOptions::default()).unwrap();
        assert!(!plain.converged);
        let hist = power_iteration(
            &p,
            &u0,
            &EigOptions {
                sign_mode: SignMode::Historical,
                ..EigOptions::default()
            },
        )
        .unwrap();
        assert!(hist.converged);
        assert!((hist.lambda + 2.0).abs() < 1e-6);
    }

    #[test]
    fn hardcoded_sign_mode_aligns_with_reference() {
        let p = diag(&[2.0, 1.0]);
        let u0 = DenseVector::from_slice(&[-0.9, 0.1]).unwrap();
        let r = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        let res = power_iteration(
            &p,
            &u0,
            &EigOptions {
                sign_mode: SignMode::HardCoded,
                reference: Some(r.clone()),
                ..EigOptions::default()
            },
        )
        .unwrap();
        assert!(res.y.dot(&r) >= 0.0);
        assert!((res.lambda - 2.0).abs() < 1e-6);
    }

    #[test]
    fn simultaneous_iteration_diagonal() {
        let p = diag(&[3.0, 1.0]);
        let r = simultaneous_iteration(&p, &EigOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.lambda - 3.0).abs() < 1e-12);
        assert!((r.y[0].abs() - 1.0).abs() < 1e-12);
        assert!(r.y[1].abs() < 1e-12);
    }

    #[test]
    fn simultaneous_iteration_identity() {
        let p = diag(&[1.0, 1.0, 1.0]);
        let r = simultaneous_iteration(&p, &EigOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.lambda - 1.0).abs() < 1e-12);
        // first column under the non-negative-diagonal convention
        assert!((r.y[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pi_scale_equivariance() {
        let mut a = DenseMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = 1.0 + ((i * 3 + j) as f64) * 0.1;
            }
        }
        let sym = a.add(&a.transpose());
        let p1 = IedProblem::new(sym.clone(), true).unwrap();
        let p2 = IedProblem::new(sym.scale(3.0), true).unwrap();
        let u0 = DenseVector::from_slice(&[1.0, 0.2, -0.4]).unwrap();
        let opts = EigOptions {
            tol: 1e-12,
            max_iters: 2000,
            ..EigOptions::default()
        };
        let r1 = power_iteration(&p1, &u0, &opts).unwrap();
        let r2 = power_iteration(&p2, &u0, &opts).unwrap();
        assert!((r2.lambda / r1.lambda - 3.0).abs() < 1e-8);
        assert!(r1.y.sub(&r2.y).norm() < 1e-8);
    }

    #[test]
    fn symmetric_hint_validated() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(
            IedProblem::new(a, true),
            Err(Error::Degenerate(_))
        ));
    }
}
