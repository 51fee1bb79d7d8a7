//! Metrics, deterministic samplers, and the independent oracles the test
//! suites are built on.

pub mod metrics;
pub mod oracles;
pub mod sampling;

pub use metrics::{eigen_distance, fpd_ied, fpd_less, mre, MreReport};
pub use oracles::{
    brute_force_ied_hessian, brute_force_less_hessian, finite_diff_matrix, finite_diff_vector,
    jacobi_eigh, kkt_polish, reference_eig, reference_less,
};
pub use sampling::{sample_less_instance, sample_matrix, seeded_unit_vector, Dist, SampleSpec};
