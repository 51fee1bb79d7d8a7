//! Principal eigenpair of a square matrix as a differentiable layer.
//!
//! [`solver`] provides power iteration and simultaneous (QR/orthogonal)
//! iteration with sign-consistency handling; [`grad`] provides the two
//! implicit backward passes (declarative and fixed-point) and the
//! row/column flip transform relating ascending- and descending-order
//! spectra.

pub mod grad;
pub mod solver;

pub use grad::{
    ddn_backward, flip_transform, ift_backward, ift_jacobian_backward, lagrange_multiplier,
    mixed_hessian_rules, GradMethod, HessianRules, IedGradients,
};
pub use solver::{
    power_iteration, sign_consistency, simultaneous_iteration, EigMethod, EigOptions, EigResult,
    IedProblem, SignMode,
};
