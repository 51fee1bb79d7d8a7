//! Differentiable declarative layers for principal matrix features.
//!
//! Two layers are provided, each with an iterative forward solver and a
//! closed-form implicit backward pass:
//!
//! - **LESS** (least squares on sphere): minimize `0.5 * ||A u - b||^2`
//!   subject to `||u|| = 1`, solved by projected gradient descent with
//!   optional refinements (tangent-space projection, direction weighting,
//!   backtracking line search, tangent weight decay). Gradients of an
//!   upper-level loss with respect to `A` and `b` come from the implicit
//!   differentiation of the constrained argmin.
//! - **IED** (iterative eigen decomposition): the principal eigenpair of a
//!   square matrix via power iteration or simultaneous iteration, with
//!   gradients from either the declarative (constrained argmin) route or
//!   the fixed-point route.
//!
//! Both backward passes exploit the sparsity of the mixed second-derivative
//! tensor so that nothing of size `n * m * n` (or `m^3`) is ever allocated
//! on the fast path. Dense, materialized variants are kept for verification
//! and benchmarking.
//!
//! The [`eval`] module holds the metrics, samplers and independent oracles
//! (finite differences, brute-force tensor assembly, a Jacobi reference
//! eigensolver, an angle-grid reference for 2-D sphere least squares) used
//! by the test suites. The [`bench`] module drives the desk-scale
//! experiments behind the `pmaf` command-line binary.
//!
//! See the `examples/` directory for one runnable program per capability:
//!
//! ```bash
//! cargo run --release --example less_solve
//! cargo run --release --example less_backward
//! cargo run --release --example ied_solve
//! cargo run --release --example ied_backward
//! cargo run --release --example case_study
//! cargo run --release --example precision_sweep
//! cargo run --release --example backward_bench
//! ```

pub mod bench;
mod error;
pub mod eval;
pub mod ied;
pub mod less;
pub mod linalg;
pub mod memtrack;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector, Precision, Scalar};
