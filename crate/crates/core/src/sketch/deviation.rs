//! Spectral distance between a matrix and its sketch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectral::{self, Gram, SymmetricOperator, DENSE_LIMIT, DEFAULT_MAX_ITER, INTERNAL_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDeviation {
    /// ‖A − Ã‖₂.
    pub op_norm_diff: f64,
    /// ‖AᵀA − ÃᵀÃ‖₂.
    pub gram_diff: f64,
}

/// x ↦ AᵀA x − BᵀB x.
struct GramDifference<'a> {
    a: Gram<'a>,
    b: Gram<'a>,
}

impl SymmetricOperator for GramDifference<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let ga = self.a.apply(x);
        let gb = self.b.apply(x);
        ga.iter().zip(gb).map(|(p, q)| p - q).collect()
    }
}

/// Largest |λ| of the symmetric difference AᵀA − BᵀB.
pub fn gram_difference_norm(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dim(format!("shape mismatch {:?} vs {:?}", a.shape(), b.shape())));
    }
    let n = a.cols();
    if n <= DENSE_LIMIT {
        let ga = a.gram_dense();
        let gb = b.gram_dense();
        let d: Vec<f64> = ga.iter().zip(&gb).map(|(x, y)| x - y).collect();
        let (values, _) = spectral::dense_symmetric_eigen(n, &d);
        return Ok(values[0].abs().max(values[n - 1].abs()));
    }
    let op = GramDifference { a: Gram(a), b: Gram(b) };
    let pairs = spectral::subspace_eigs(&op, 1, 1e-10, DEFAULT_MAX_ITER, INTERNAL_SEED)?;
    Ok(pairs.values[0].abs())
}

/// ‖A − Ã‖₂ and ‖AᵀA − ÃᵀÃ‖₂.
pub fn spectral_deviation(a: &Matrix, sketch: &Matrix) -> Result<SpectralDeviation> {
    let diff = a.sub(sketch)?;
    let op_norm_diff = if diff.nnz() == 0 {
        0.0
    } else if diff.cols() <= DENSE_LIMIT {
        let (values, _) = spectral::dense_symmetric_eigen(diff.cols(), &diff.gram_dense());
        values[0].max(0.0).sqrt()
    } else {
        spectral::spectral_norm(&diff)?
    };
    let gram_diff = gram_difference_norm(a, sketch)?;
    Ok(SpectralDeviation { op_norm_diff, gram_diff })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pair_is_zero() {
        let a = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0], vec![2.0, 1.0]]).unwrap();
        let d = spectral_deviation(&a, &a).unwrap();
        assert_eq!(d.op_norm_diff, 0.0);
        assert_eq!(d.gram_diff, 0.0);
    }

    #[test]
    fn diagonal_difference() {
        let a = Matrix::diag(&[3.0, 4.0]).unwrap();
        let b = Matrix::diag(&[3.0, 0.0]).unwrap();
        let d = spectral_deviation(&a, &b).unwrap();
        assert!((d.op_norm_diff - 4.0).abs() < 1e-12);
        assert!((d.gram_diff - 16.0).abs() < 1e-12);
    }

    #[test]
    fn negative_dominant_eigenvalue_is_reported_by_magnitude() {
        let a = Matrix::diag(&[1.0, 0.0]).unwrap();
        let b = Matrix::diag(&[0.0, 3.0]).unwrap();
        // AᵀA − BᵀB = diag(1, −9).
        assert!((gram_difference_norm(&a, &b).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn iterative_path_matches_dense_path() {
        let n = DENSE_LIMIT + 6;
        let m = n + 4;
        let mut r = crate::rng::seeded(5);
        use rand::Rng;
        let a = Matrix::dense(m, n, (0..m * n).map(|_| r.random::<f64>() - 0.5).collect()).unwrap();
        let b = Matrix::dense(m, n, (0..m * n).map(|_| r.random::<f64>() - 0.5).collect()).unwrap();
        let iterative = gram_difference_norm(&a, &b).unwrap();
        let ga = a.gram_dense();
        let gb = b.gram_dense();
        let d: Vec<f64> = ga.iter().zip(&gb).map(|(x, y)| x - y).collect();
        let (values, _) = spectral::dense_symmetric_eigen(n, &d);
        let dense = values[0].abs().max(values[n - 1].abs());
        assert!((iterative - dense).abs() < 1e-6 * dense);
    }

    #[test]
    fn shape_mismatch() {
        let a = Matrix::identity(2).unwrap();
        let b = Matrix::identity(3).unwrap();
        assert!(matches!(spectral_deviation(&a, &b), Err(Error::Dimension(_))));
    }
}
