//! Projected gradient descent on the sphere with adaptive step control.

use crate::linalg::{cosine_sim, proj_sphere, proj_tangent, solve as linsolve};
use crate::{DenseMatrix, DenseVector, Error, Result, Scalar};
use serde::{Deserialize, Serialize};

/// One sphere-constrained least-squares instance.
#[derive(Debug, Clone)]
pub struct LessProblem<T> {
    a: DenseMatrix<T>,
    b: DenseVector<T>,
}

impl<T: Scalar> LessProblem<T> {
    pub fn new(a: DenseMatrix<T>, b: DenseVector<T>) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::shape("empty matrix".to_string()));
        }
        if a.rows() != b.len() {
            return Err(Error::shape(format!(
                "A is {}x{} but b has length {}",
                a.rows(),
                a.cols(),
                b.len()
            )));
        }
        if !a.is_all_finite() || !b.is_all_finite() {
            return Err(Error::NonFinite("problem data"));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DenseMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DenseVector<T> {
        &self.b
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn cast<S: Scalar>(&self) -> LessProblem<S> {
        LessProblem {
            a: self.a.cast(),
            b: self.b.cast(),
        }
    }

    fn check_len(&self, u: &DenseVector<T>) -> Result<()> {
        if u.len() != self.n() {
            return Err(Error::shape(format!(
                "iterate length {} != {}",
                u.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Step-size control via backtracking line search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlsMode {
    /// No line search; the closed-form step is used as is.
    Off,
    /// Backtracking from `eta = 1`.
    EtaOne,
    /// Backtracking from the closed-form step.
    EtaDerived,
}

/// Whether the unconstrained optimum lies inside or outside the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerOuter {
    Inner,
    Outer,
}

/// Solver configuration. `bls != Off` and `use_twd` are mutually exclusive
/// step-control schemes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LessConfig {
    pub use_rm: bool,
    pub use_dw: bool,
    pub bls: BlsMode,
    pub use_twd: bool,
    /// Sufficient-decrease constant, in `(0, 0.5]`.
    pub alpha: f64,
    /// Line-search decay rate, in `(0, 1)`.
    pub beta_bls: f64,
    /// Tangent-weight decay rate, in `(0, 1)`.
    pub beta_twd: f64,
    /// Convergence tolerance on the objective decrease.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LessConfig {
    fn default() -> Self {
        Self {
            use_rm: false,
            use_dw: false,
            bls: BlsMode::Off,
            use_twd: false,
            alpha: 0.5,
            beta_bls: 0.8,
            beta_twd: 0.9,
            tol: 1e-7,
            max_iters: 100,
        }
    }
}

impl LessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bls != BlsMode::Off && self.use_twd {
            return Err(Error::Config(
                "backtracking line search and tangent weight decay are mutually exclusive"
                    .to_string(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 0.5], got {}",
                self.alpha
            )));
        }
        for (name, v) in [("beta_bls", self.beta_bls), ("beta_twd", self.beta_twd)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// One solver iterate: the (projected) solution, its objective and the
/// step size that produced it.
#[derive(Debug, Clone)]
pub struct TraceStep<T> {
    pub u: DenseVector<T>,
    pub objective: T,
    pub eta: T,
}

/// Converged (or best-effort) solution with the full iteration trace.
#[derive(Debug, Clone)]
pub struct LessResult<T> {
    pub y: DenseVector<T>,
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
    pub inner_outer: InnerOuter,
    /// Initial iterate fell back to `e_1` because the unconstrained
    /// solution was zero.
    pub fallback_init: bool,
    pub trace: Vec<TraceStep<T>>,
}

/// Initialization from the unconstrained least-squares solution.
#[derive(Debug, Clone)]
pub struct LessInit<T> {
    /// `(A^T A)^{-1} A^T b` before projection.
    pub u0_raw: DenseVector<T>,
    /// Sphere projection of `u0_raw` (or `e_1` on fallback).
    pub u0: DenseVector<T>,
    pub inner_outer: InnerOuter,
    pub fallback: bool,
}

/// `0.5 * ||A u - b||^2`.
pub fn objective<T: Scalar>(p: &LessProblem<T>, u: &DenseVector<T>) -> Result<T> {
    p.check_len(u)?;
    let r = p.a.matvec(u).sub(&p.b);
    Ok(T::of(0.5) * r.dot(&r))
}

/// `A^T (A u - b)`.
pub fn gradient<T: Scalar>(p: &LessProblem<T>, u: &DenseVector<T>) -> Result<DenseVector<T>> {
    p.check_len(u)?;
    Ok(p.a.matvec_t(&p.a.matvec(u).sub(&p.b)))
}

/// Solves the normal equations for the unconstrained optimum and projects
/// it onto the sphere. A zero unconstrained solution falls back to `e_1`
/// with `Inner` classification.
pub fn init_unconstrained<T: Scalar>(p: &LessProblem<T>) -> Result<LessInit<T>> {
    let gram = p.a.gram();
    let atb = p.a.matvec_t(&p.b);
    let u0_raw = match linsolve(&gram, &atb, 0.0) {
        Ok(x) => x,
        Err(Error::Singular { .. }) => {
            let ridge = 1e-12 * gram.frob_norm().to_f64().max(1.0);
            linsolve(&gram, &atb, ridge)?
        }
        Err(e) => return Err(e),
    };
    let norm = u0_raw.norm();
    if norm == T::zero() {
        return Ok(LessInit {
            u0: DenseVector::basis(p.n(), 0),
            u0_raw,
            inner_outer: InnerOuter::Inner,
            fallback: true,
        });
    }
    let inner_outer = if norm >= T::one() {
        InnerOuter::Outer
    } else {
        InnerOuter::Inner
    };
    Ok(LessInit {
        u0: u0_raw.scale(T::one() / norm),
        u0_raw,
        inner_outer,
        fallback: false,
    })
}

/// Exact line-search step for the unconstrained quadratic along the
/// negated gradient: `||A^T r||^2 / ||A A^T r||^2` with `r = A u - b`.
/// Returns 0 at a stationary point.
pub fn exact_step<T: Scalar>(p: &LessProblem<T>, u: &DenseVector<T>) -> Result<T> {
    let g = gradient(p, u)?;
    let ag = p.a.matvec(&g);
    let den = ag.dot(&ag);
    if den == T::zero() {
        return Ok(T::zero());
    }
    Ok(g.dot(&g) / den)
}

/// Exact step along the tangent-projected direction:
/// `r^T A (I - u u^T) A^T r / ||A (I - u u^T) A^T r||^2`.
/// Returns 0 when the tangent gradient vanishes.
pub fn tangent_exact_step<T: Scalar>(p: &LessProblem<T>, u: &DenseVector<T>) -> Result<T> {
    p.check_len(u)?;
    let r = p.a.matvec(u).sub(&p.b);
    let t = proj_tangent(u, &p.a.matvec_t(&r))?;
    let at = p.a.matvec(&t);
    let den = at.dot(&at);
    if den == T::zero() {
        return Ok(T::zero());
    }
    Ok(r.dot(&at) / den)
}

/// Direction weight `w = 1 - cos(d, u0_raw)` with `d = -grad` for outer
/// problems and `+grad` for inner ones. Returns 0 for a zero gradient
/// (a zero weight terminates the update).
pub fn direction_weight<T: Scalar>(
    p: &LessProblem<T>,
    u: &DenseVector<T>,
    u0_raw: &DenseVector<T>,
) -> Result<T> {
    let g = gradient(p, u)?;
    if g.norm() == T::zero() {
        return Ok(T::zero());
    }
    if u0_raw.norm() == T::zero() {
        return Err(Error::Degenerate("direction weight needs a nonzero center"));
    }
    let d = if u0_raw.norm() >= T::one() {
        g.scale(-T::one())
    } else {
        g
    };
    Ok(T::one() - cosine_sim(&d, u0_raw)?)
}

/// Sufficient-decrease test
/// `f(u + eta du) <= f(u) + alpha * eta * grad(u)^T du`.
pub fn armijo_accepts<T: Scalar>(
    p: &LessProblem<T>,
    u: &DenseVector<T>,
    du: &DenseVector<T>,
    eta: T,
    alpha: T,
) -> Result<bool> {
    p.check_len(du)?;
    let lhs = objective(p, &u.axpy(eta, du))?;
    let rhs = objective(p, u)? + alpha * eta * gradient(p, u)?.dot(du);
    Ok(lhs <= rhs)
}

/// Whether consecutive tangent descent directions point into opposing
/// half-spaces (strictly more than 90 degrees apart). Zero vectors mean
/// the iteration has converged, so no decay.
pub fn twd_should_decay<T: Scalar>(g_t: &DenseVector<T>, g_t1: &DenseVector<T>) -> Result<bool> {
    if g_t.norm() == T::zero() || g_t1.norm() == T::zero() {
        return Ok(false);
    }
    Ok(cosine_sim(g_t, g_t1)? < T::zero())
}

fn lossy_trace<T: Scalar>(trace: &[TraceStep<T>]) -> Vec<(Vec<f64>, f64, f64)> {
    trace
        .iter()
        .map(|s| {
            (
                s.u.data().iter().map(|v| v.to_f64()).collect(),
                s.objective.to_f64(),
                s.eta.to_f64(),
            )
        })
        .collect()
}

// Backtracking and tangent-decay loops terminate mathematically (the step
// shrinks geometrically); the caps only guard non-finite inputs.
const MAX_BACKTRACKS: usize = 50;
const MAX_TWD_DECAYS: usize = 500;

/// Runs projected gradient descent with the refinements selected in `cfg`.
///
/// Per iteration: the descent direction is the negated gradient, tangent
/// projected under `use_rm`; the step comes from the closed-form exact
/// step, or from backtracking (started at 1 for `EtaOne`, at the closed
/// form for `EtaDerived`) where the sufficient-decrease test is evaluated
/// at the sphere-projected trial point; tangent weight decay shrinks the
/// step while the trial point's tangent gradient reverses against the
/// current direction; the direction weight then scales the accepted step.
/// Convergence is declared when the objective change drops to `cfg.tol`.
pub fn solve<T: Scalar>(p: &LessProblem<T>, cfg: &LessConfig) -> Result<LessResult<T>> {
    cfg.validate()?;
    let init = init_unconstrained(p)?;
    solve_with_init(p, cfg, init)
}

/// Like [`solve`] but starting from a caller-supplied point (projected
/// onto the sphere) instead of the unconstrained least-squares solution.
/// Classification and the direction weight still use the unconstrained
/// solution.
pub fn solve_from<T: Scalar>(
    p: &LessProblem<T>,
    cfg: &LessConfig,
    start: &DenseVector<T>,
) -> Result<LessResult<T>> {
    cfg.validate()?;
    p.check_len(start)?;
    let mut init = init_unconstrained(p)?;
    init.u0 = proj_sphere(start)?;
    solve_with_init(p, cfg, init)
}

fn solve_with_init<T: Scalar>(
    p: &LessProblem<T>,
    cfg: &LessConfig,
    init: LessInit<T>,
) -> Result<LessResult<T>> {
    let mut u = init.u0.clone();
    let mut f = objective(p, &u)?;
    let mut trace = vec![TraceStep {
        u: u.clone(),
        objective: f,
        eta: T::zero(),
    }];
    let mut converged = false;
    let alpha = T::of(cfg.alpha);
    let beta_bls = T::of(cfg.beta_bls);
    let beta_twd = T::of(cfg.beta_twd);
    let tol = T::of(cfg.tol);

    for _ in 0..cfg.max_iters {
        let g = gradient(p, &u)?;
        if g.norm() == T::zero() {
            converged = true;
            break;
        }
        let d = if cfg.use_rm {
            proj_tangent(&u, &g.scale(-T::one()))?
        } else {
            g.scale(-T::one())
        };
        if d.norm() == T::zero() {
            converged = true;
            break;
        }

        let derived = if cfg.use_rm {
            tangent_exact_step(p, &u)?
        } else {
            exact_step(p, &u)?
        };

        let mut eta = match cfg.bls {
            BlsMode::Off => derived,
            BlsMode::EtaOne => T::one(),
            BlsMode::EtaDerived => derived,
        };
        if eta == T::zero() {
            converged = true;
            break;
        }

        if cfg.bls != BlsMode::Off {
            // Sufficient decrease is required of the point actually taken,
            // i.e. after re-projection onto the sphere.
            let slope = alpha * g.dot(&d);
            for _ in 0..MAX_BACKTRACKS {
                let trial = proj_sphere(&u.axpy(eta, &d))?;
                if objective(p, &trial)? <= f + eta * slope {
                    break;
                }
                eta = eta * beta_bls;
            }
        } else if cfg.use_twd {
            let d_tan = if cfg.use_rm {
                d.clone()
            } else {
                proj_tangent(&u, &d)?
            };
            for _ in 0..MAX_TWD_DECAYS {
                let trial = u.axpy(eta, &d);
                if trial.norm() == T::zero() {
                    break;
                }
                let g_trial = proj_tangent(&trial, &gradient(p, &trial)?.scale(-T::one()))?;
                if twd_should_decay(&d_tan, &g_trial)? {
                    eta = eta * beta_twd;
                } else {
                    break;
                }
            }
        }

        let mut step = eta;
        if cfg.use_dw && !init.fallback {
            step = step * direction_weight(p, &u, &init.u0_raw)?;
        }

        let trial = u.axpy(step, &d);
        if trial.norm() == T::zero() || !trial.is_all_finite() {
            return Err(Error::NumericFailure {
                iteration: trace.len() - 1,
                trace: lossy_trace(&trace),
            });
        }
        let next = proj_sphere(&trial)?;
        let f_next = objective(p, &next)?;
        if !f_next.is_finite() {
            return Err(Error::NumericFailure {
                iteration: trace.len() - 1,
                trace: lossy_trace(&trace),
            });
        }
        trace.push(TraceStep {
            u: next.clone(),
            objective: f_next,
            eta: step,
        });
        let decrease = (f - f_next).abs();
        u = next;
        f = f_next;
        if decrease <= tol {
            converged = true;
            break;
        }
    }

    Ok(LessResult {
        y: u,
        objective: f,
        iterations: trace.len() - 1,
        converged,
        inner_outer: init.inner_outer,
        fallback_init: init.fallback,
        trace,
    })
}

/// Norm of the tangent component of the gradient at `y`; zero at any
/// first-order stationary point of the constrained problem.
pub fn stationarity_residual<T: Scalar>(p: &LessProblem<T>, y: &DenseVector<T>) -> Result<T> {
    Ok(proj_tangent(y, &gradient(p, y)?)?.norm())
}
