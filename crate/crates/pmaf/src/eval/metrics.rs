//! Solution-quality metrics: fixed-point distance, eigen residual, and
//! mean relative error against a reference.

use crate::ied::IedProblem;
use crate::less::LessProblem;
use crate::{DenseVector, Error, Result, Scalar};

/// Fixed-point distance of a sphere least-squares solution: `||A y - b||`.
pub fn fpd_less<T: Scalar>(p: &LessProblem<T>, y: &DenseVector<T>) -> Result<T> {
    if y.len() != p.n() {
        return Err(Error::shape(format!(
            "solution length {} != {}",
            y.len(),
            p.n()
        )));
    }
    Ok(p.a().matvec(y).sub(p.b()).norm())
}

/// Fixed-point distance of an eigen solution: `||y - A y / ||A y||||`.
pub fn fpd_ied<T: Scalar>(p: &IedProblem<T>, y: &DenseVector<T>) -> Result<T> {
    if y.len() != p.m() {
        return Err(Error::shape(format!(
            "solution length {} != {}",
            y.len(),
            p.m()
        )));
    }
    let ay = p.a().matvec(y);
    let norm = ay.norm();
    if norm == T::zero() {
        return Err(Error::ZeroImage);
    }
    Ok(y.sub(&ay.scale(T::one() / norm)).norm())
}

/// Residual of the eigen relation: `||A y - lambda y||`.
pub fn eigen_distance<T: Scalar>(
    p: &IedProblem<T>,
    y: &DenseVector<T>,
    lambda: T,
) -> Result<T> {
    if y.len() != p.m() {
        return Err(Error::shape(format!(
            "solution length {} != {}",
            y.len(),
            p.m()
        )));
    }
    Ok(p.a().matvec(y).sub(&y.scale(lambda)).norm())
}

/// Mean relative error in percent, with the number of terms whose
/// reference had to be floored away from zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MreReport {
    pub percent: f64,
    pub floored_terms: usize,
}

const MRE_FLOOR: f64 = 1e-12;

/// `(1/K) sum (F_k - F^r_k) / F^r_k * 100`. Negative when the estimates
/// beat the reference. References below `1e-12` are floored to `1e-12`
/// and counted in the report.
pub fn mre(estimates: &[f64], references: &[f64]) -> Result<MreReport> {
    if estimates.len() != references.len() {
        return Err(Error::shape(format!(
            "mre: {} estimates vs {} references",
            estimates.len(),
            references.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::shape("mre of empty sequences".to_string()));
    }
    let mut floored = 0usize;
    let mut acc = 0.0f64;
    for (&e, &r) in estimates.iter().zip(references) {
        let denom = if r < MRE_FLOOR {
            floored += 1;
            MRE_FLOOR
        } else {
            r
        };
        acc += (e - r) / denom;
    }
    Ok(MreReport {
        percent: 100.0 * acc / estimates.len() as f64,
        floored_terms: floored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DenseMatrix;

    #[test]
    fn fpd_less_examples() {
        let p = LessProblem::new(
            DenseMatrix::identity(2),
            DenseVector::from_slice(&[2.0, 0.0]).unwrap(),
        )
        .unwrap();
        let y = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        assert_eq!(fpd_less(&p, &y).unwrap(), 1.0);

        let p0 = LessProblem::new(
            DenseMatrix::identity(2),
            DenseVector::from_slice(&[1.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(fpd_less(&p0, &y).unwrap(), 0.0);
    }

    #[test]
    fn fpd_ied_examples() {
        let a = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]]).unwrap();
        let p = IedProblem::new(a, true).unwrap();
        let e1 = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        let e2 = DenseVector::from_slice(&[0.0, 1.0]).unwrap();
        assert_eq!(fpd_ied(&p, &e1).unwrap(), 0.0);
        // any eigenvector is a fixed point, dominance is not certified
        assert_eq!(fpd_ied(&p, &e2).unwrap(), 0.0);

        let a = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let p = IedProblem::new(a, true).unwrap();
        let f = fpd_ied(&p, &e1).unwrap();
        let expect = {
            let s5 = 5.0f64.sqrt();
            ((1.0 - 2.0 / s5).powi(2) + (1.0f64 / s5).powi(2)).sqrt()
        };
        assert!((f - expect).abs() < 1e-12);
        assert!((f - 0.4595).abs() < 1e-4);
    }

    #[test]
    fn eigen_distance_examples() {
        let a = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]]).unwrap();
        let p = IedProblem::new(a, true).unwrap();
        let e1 = DenseVector::from_slice(&[1.0, 0.0]).unwrap();
        assert_eq!(eigen_distance(&p, &e1, 2.0).unwrap(), 0.0);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let y = DenseVector::from_slice(&[h, h]).unwrap();
        let d = eigen_distance(&p, &y, 2.0).unwrap();
        assert!((d - h).abs() < 1e-12);
    }

    #[test]
    fn mre_examples() {
        let r = mre(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.percent, 0.0);
        assert_eq!(r.floored_terms, 0);

        assert!((mre(&[1.1], &[1.0]).unwrap().percent - 10.0).abs() < 1e-12);
        assert!((mre(&[0.9, 1.0], &[1.0, 1.0]).unwrap().percent + 5.0).abs() < 1e-12);

        let floored = mre(&[1.0], &[0.0]).unwrap();
        assert_eq!(floored.floored_terms, 1);
    }
}
