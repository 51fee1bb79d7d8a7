//! Deterministic problem samplers. A seed fully determines every draw;
//! draws happen in f64 and are cast down when a lower precision is
//! requested, so both precisions see the same data.

use crate::less::LessProblem;
use crate::{DenseMatrix, DenseVector, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Entry distribution of a sampled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dist {
    /// Standard normal.
    Gaussian01,
    /// Uniform on `[0, 1)`.
    Uniform01,
    /// Von Mises with location 0 and concentration 1.
    VonMises01,
    /// Uniform choice from `{0, 1, ..., 9}`.
    Choice10,
}

/// What to sample: distribution, shape, post-processing, seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSpec {
    pub dist: Dist,
    pub m: usize,
    pub n: usize,
    /// Apply `A <- A + A^T` after any absolute value (requires `m == n`).
    pub symmetric: bool,
    /// Take entrywise absolute values.
    pub absolute: bool,
    pub seed: u64,
}

fn draw(dist: Dist, rng: &mut ChaCha8Rng) -> f64 {
    match dist {
        Dist::Gaussian01 => gaussian(rng),
        Dist::Uniform01 => rng.gen::<f64>(),
        Dist::VonMises01 => von_mises(rng, 1.0),
        Dist::Choice10 => rng.gen_range(0..10u32) as f64,
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one value per call keeps the stream layout simple
    loop {
        let u1: f64 = rng.gen();
        if u1 > 0.0 {
            let u2: f64 = rng.gen();
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

/// Best-Fisher rejection sampler for the von Mises distribution with
/// location 0, returning angles in `(-pi, pi]`.
fn von_mises(rng: &mut ChaCha8Rng, kappa: f64) -> f64 {
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let z = (std::f64::consts::PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen();
            let angle = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { angle } else { -angle };
        }
    }
}

/// Samples a matrix per the spec. Identical specs produce bitwise
/// identical outputs.
pub fn sample_matrix<T: Scalar>(spec: &SampleSpec) -> DenseMatrix<T> {
    assert!(
        !spec.symmetric || spec.m == spec.n,
        "symmetric sampling requires a square shape"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = Vec::with_capacity(spec.m * spec.n);
    for _ in 0..spec.m * spec.n {
        let mut v = draw(spec.dist, &mut rng);
        if spec.absolute {
            v = v.abs();
        }
        data.push(v);
    }
    let a = DenseMatrix::from_vec(spec.m, spec.n, data).expect("sampled data is finite");
    let a = if spec.symmetric {
        a.add(&a.transpose())
    } else {
        a
    };
    a.cast()
}

/// Samples a sphere least-squares instance: `A` then `b` from the same
/// stream. `absolute` applies to both; `symmetric` is not meaningful here.
pub fn sample_less_instance<T: Scalar>(spec: &SampleSpec) -> LessProblem<T> {
    assert!(!spec.symmetric, "least-squares instances are not symmetrized");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut take = |count: usize| -> Vec<f64> {
        (0..count)
            .map(|_| {
                let v = draw(spec.dist, &mut rng);
                if spec.absolute {
                    v.abs()
                } else {
                    v
                }
            })
            .collect()
    };
    let a = DenseMatrix::from_vec(spec.m, spec.n, take(spec.m * spec.n)).expect("finite");
    let b = DenseVector::from_vec(take(spec.m)).expect("finite");
    LessProblem::new(a.cast(), b.cast()).expect("sampled instance is valid")
}

/// Deterministic unit-norm Gaussian vector, for solver initialization.
pub fn seeded_unit_vector<T: Scalar>(len: usize, seed: u64) -> DenseVector<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Vec<f64> = (0..len).map(|_| gaussian(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            let unit: Vec<f64> = v.iter().map(|x| x / norm).collect();
            return DenseVector::from_vec(unit).expect("finite").cast();
        }
    }
}
