//! Sampling distributions over matrix entries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectral::{self, DEFAULT_MAX_ITER};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    /// α·|A_ij|/‖A‖₁ + (1−α)·A_ij²/‖A‖_F².
    Hybrid { alpha: f64 },
    /// Equal mass on every cell of the support.
    Uniform,
    /// Element-wise leverage scores of the rank-ρ factors.
    Leverage { rank: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    NonzerosOnly,
    AllEntries,
}

/// Short description of a distribution, carried by sketches and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionDescriptor {
    #[serde(flatten)]
    pub kind: DistributionKind,
    pub support: SupportKind,
}

/// Probability table over the cells of an m×n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    rows: usize,
    cols: usize,
    kind: DistributionKind,
    support: SupportKind,
    /// Row-major flat indices `i * cols + j`, ascending.
    cells: Vec<usize>,
    probs: Vec<f64>,
}

impl SamplingDistribution {
    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn support_kind(&self) -> SupportKind {
        self.support
    }

    pub fn descriptor(&self) -> DistributionDescriptor {
        DistributionDescriptor { kind: self.kind, support: self.support }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn support_len(&self) -> usize {
        self.cells.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub(crate) fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// `(i, j, p)` for every support cell.
    pub fn table(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.cells.iter().zip(&self.probs).map(|(&c, &p)| (c / self.cols, c % self.cols, p))
    }

    /// Probability of cell (i, j); 0 off the support.
    pub fn probability(&self, row: usize, col: usize) -> f64 {
        self.cells.binary_search(&(row * self.cols + col)).map_or(0.0, |k| self.probs[k])
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

pub(crate) fn check_nonzero(a: &Matrix) -> Result<()> {
    if a.nnz() == 0 {
        return Err(Error::Degenerate("matrix has no nonzero entries".into()));
    }
    Ok(())
}

/// Hybrid (ℓ1, ℓ2) probabilities on the nonzeros of `a`.
pub fn hybrid_probabilities(a: &Matrix, alpha: f64) -> Result<SamplingDistribution> {
    check_alpha(alpha)?;
    check_nonzero(a)?;
    let l1 = a.l1_norm();
    let fro_sq = a.frobenius_norm_sq();
    let cols = a.cols();
    let (cells, probs) = a
        .nonzeros()
        .map(|e| {
            let p = alpha * e.value.abs() / l1 + (1.0 - alpha) * e.value * e.value / fro_sq;
            (e.row * cols + e.col, p)
        })
        .unzip();
    Ok(SamplingDistribution {
        rows: a.rows(),
        cols,
        kind: DistributionKind::Hybrid { alpha },
        support: SupportKind::NonzerosOnly,
        cells,
        probs,
    })
}

/// Uniform probabilities over all m·n positions.
pub fn uniform_probabilities(a: &Matrix) -> SamplingDistribution {
    let total = a.rows() * a.cols();
    SamplingDistribution {
        rows: a.rows(),
        cols: a.cols(),
        kind: DistributionKind::Uniform,
        support: SupportKind::AllEntries,
        cells: (0..total).collect(),
        probs: vec![1.0 / total as f64; total],
    }
}

/// Uniform probabilities over the nonzeros only.
pub fn uniform_nonzero_probabilities(a: &Matrix) -> Result<SamplingDistribution> {
    check_nonzero(a)?;
    let cols = a.cols();
    let cells: Vec<usize> = a.nonzeros().map(|e| e.row * cols + e.col).collect();
    let p = 1.0 / cells.len() as f64;
    Ok(SamplingDistribution {
        rows: a.rows(),
        cols,
        kind: DistributionKind::Uniform,
        support: SupportKind::NonzerosOnly,
        probs: vec![p; cells.len()],
        cells,
    })
}

/// Row and column leverage scores of the rank-ρ truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverageScores {
    /// μᵢ, squared row norms of the m×ρ left factor.
    pub mu: Vec<f64>,
    /// νⱼ, squared row norms of the n×ρ right factor.
    pub nu: Vec<f64>,
    pub rank: usize,
}

/// Leverage scores from the top-`rank` singular triplets of `a`.
pub fn leverage_scores(a: &Matrix, rank: usize, seed: u64) -> Result<LeverageScores> {
    let (m, n) = a.shape();
    if rank == 0 || rank > m.min(n) {
        return Err(Error::param(format!("rank must lie in [1, {}], got {rank}", m.min(n))));
    }
    let svd = spectral::top_singular_triplets(a, rank, 1e-10, DEFAULT_MAX_ITER, seed)?;
    let top = svd.triplets[0].sigma;
    if let Some(t) = svd.triplets.iter().find(|t| t.sigma <= 1e-6 * top.max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate(format!(
            "matrix rank is below {rank} (singular value {:.3e})",
            t.sigma
        )));
    }
    let mut mu = vec![0.0; m];
    let mut nu = vec![0.0; n];
    for t in &svd.triplets {
        mu.iter_mut().zip(&t.u).for_each(|(s, x)| *s += x * x);
        nu.iter_mut().zip(&t.v).for_each(|(s, x)| *s += x * x);
    }
    Ok(LeverageScores { mu, nu, rank })
}

/// p_ij = ½·(μᵢ + νⱼ)/((m+n)ρ) + 1/(2mn) over all m·n entries.
pub fn leverage_probabilities(scores: &LeverageScores, rows: usize, cols: usize) -> Result<SamplingDistribution> {
    if scores.mu.len() != rows || scores.nu.len() != cols {
        return Err(Error::Consistency(format!(
            "scores have {}x{} entries, matrix is {rows}x{cols}",
            scores.mu.len(),
            scores.nu.len()
        )));
    }
    if rows == 0 || cols == 0 || scores.rank == 0 {
        return Err(Error::param("empty leverage scores"));
    }
    let lev_scale = 0.5 / ((rows + cols) as f64 * scores.rank as f64);
    let floor = 0.5 / (rows as f64 * cols as f64);
    let mut probs = Vec::with_capacity(rows * cols);
    for &mu in &scores.mu {
        for &nu in &scores.nu {
            probs.push(lev_scale * (mu + nu) + floor);
        }
    }
    Ok(SamplingDistribution {
        rows,
        cols,
        kind: DistributionKind::Leverage { rank: scores.rank },
        support: SupportKind::AllEntries,
        cells: (0..rows * cols).collect(),
        probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(d: &SamplingDistribution) -> f64 {
        d.probabilities().iter().sum()
    }

    #[test]
    fn hybrid_examples() {
        let a = Matrix::diag(&[3.0, 4.0]).unwrap();
        let d = hybrid_probabilities(&a, 1.0).unwrap();
        assert!((d.probability(0, 0) - 3.0 / 7.0).abs() < 1e-15);
        assert!((d.probability(1, 1) - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(d.probability(0, 1), 0.0);
        assert_eq!(d.support_len(), 2);

        let d = hybrid_probabilities(&a, 0.5).unwrap();
        assert!((d.probability(0, 0) - 0.394_285_714_285_714_3).abs() < 1e-12);
        assert!((d.probability(1, 1) - 0.605_714_285_714_285_7).abs() < 1e-12);
    }

    #[test]
    fn hybrid_equal_magnitudes_are_uniform() {
        let a = Matrix::from_rows(&[vec![2.0, -2.0, 0.0], vec![0.0, 2.0, -2.0]]).unwrap();
        for alpha in [0.05, 0.3, 0.7, 1.0] {
            let d = hybrid_probabilities(&a, alpha).unwrap();
            assert!(d.probabilities().iter().all(|p| (p - 0.25).abs() < 1e-15));
        }
    }

    #[test]
    fn hybrid_errors() {
        let a = Matrix::diag(&[3.0, 4.0]).unwrap();
        assert!(matches!(hybrid_probabilities(&a, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(hybrid_probabilities(&a, 1.5), Err(Error::Parameter(_))));
        assert!(matches!(hybrid_probabilities(&a, f64::NAN), Err(Error::Parameter(_))));
        let z = Matrix::zeros(2, 2).unwrap();
        assert!(matches!(hybrid_probabilities(&z, 0.5), Err(Error::Degenerate(_))));
    }

    #[test]
    fn uniform_examples() {
        let d = uniform_probabilities(&Matrix::identity(2).unwrap());
        assert!(d.probabilities().iter().all(|p| *p == 0.25));
        assert_eq!(d.support_len(), 4);
        let d = uniform_probabilities(&Matrix::dense(1, 1, vec![0.0]).unwrap());
        assert_eq!(d.probabilities(), &[1.0]);
        let d = uniform_probabilities(&Matrix::zeros(3, 5).unwrap());
        assert_eq!(d.support_len(), 15);
        assert!((sum(&d) - 1.0).abs() < 1e-12);
        let d = uniform_nonzero_probabilities(&Matrix::diag(&[1.0, 0.0, 2.0]).unwrap()).unwrap();
        assert_eq!(d.support_len(), 2);
        assert_eq!(d.support_kind(), SupportKind::NonzerosOnly);
    }

    #[test]
    fn leverage_examples() {
        let ones = Matrix::dense(2, 2, vec![1.0; 4]).unwrap();
        let s = leverage_scores(&ones, 1, 0).unwrap();
        for x in s.mu.iter().chain(&s.nu) {
            assert!((x - 0.5).abs() < 1e-10);
        }
        let d = leverage_probabilities(&s, 2, 2).unwrap();
        assert!(d.probabilities().iter().all(|p| (p - 0.25).abs() < 1e-10));

        let s = leverage_scores(&Matrix::diag(&[3.0, 4.0]).unwrap(), 2, 0).unwrap();
        for x in s.mu.iter().chain(&s.nu) {
            assert!((x - 1.0).abs() < 1e-10);
        }
        let d = leverage_probabilities(&s, 2, 2).unwrap();
        assert!(d.probabilities().iter().all(|p| (p - 0.25).abs() < 1e-10));

        let e = Matrix::sparse(3, 3, vec![(0, 0, 1.0)]).unwrap();
        let s = leverage_scores(&e, 1, 0).unwrap();
        assert!((s.mu[0] - 1.0).abs() < 1e-12 && s.mu[1].abs() < 1e-12 && s.mu[2].abs() < 1e-12);
        assert!((s.nu[0] - 1.0).abs() < 1e-12 && s.nu[1].abs() < 1e-12);
    }

    #[test]
    fn leverage_rejects_rank_above_matrix_rank() {
        let e = Matrix::sparse(3, 3, vec![(0, 0, 1.0)]).unwrap();
        assert!(matches!(leverage_scores(&e, 2, 0), Err(Error::Degenerate(_))));
        assert!(matches!(leverage_scores(&e, 4, 0), Err(Error::Parameter(_))));
        let s = leverage_scores(&e, 1, 0).unwrap();
        assert!(matches!(leverage_probabilities(&s, 2, 3), Err(Error::Consistency(_))));
    }
}
