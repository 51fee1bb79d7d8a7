//! Least squares on the unit sphere: minimize `0.5 * ||A u - b||^2`
//! subject to `||u|| = 1`.
//!
//! [`solver`] holds the projected-gradient forward pass and its step-size
//! refinements; [`grad`] holds the implicit backward pass.

pub mod grad;
pub mod solver;

pub use grad::{
    backward, jacobian_backward, lagrange_multiplier, mixed_hessian_blocks, solution_adjoint,
    LessGradients,
};
pub use solver::{
    armijo_accepts, direction_weight, exact_step, gradient, init_unconstrained, objective, solve,
    solve_from, stationarity_residual, tangent_exact_step, twd_should_decay, BlsMode, InnerOuter,
    LessConfig, LessInit, LessProblem, LessResult, TraceStep,
};
