//! Deterministic sketching by zeroing small entries.

use serde::{Deserialize, Serialize};

use super::distribution::check_nonzero;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectral;

/// Keeps entries with |A_ij| ≥ delta verbatim and zeroes the rest.
pub fn threshold_sketch(a: &Matrix, delta: f64) -> Result<Matrix> {
    if !(delta >= 0.0) {
        return Err(Error::param(format!("delta must be nonnegative, got {delta}")));
    }
    let triples = a
        .nonzeros()
        .filter(|e| e.value.abs() >= delta)
        .map(|e| (e.row, e.col, e.value))
        .collect();
    Matrix::sparse(a.rows(), a.cols(), triples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub delta: f64,
    /// Σ A_ij² over the zeroed entries.
    pub lost_energy: f64,
    /// ε²‖A‖_F²/k̃, the energy budget.
    pub budget: f64,
}

/// Largest cutoff among the distinct entry magnitudes whose zeroed energy
/// stays within ε²‖A‖_F²/k̃ (= ε²‖A‖₂²). When everything fits the budget the
/// cutoff is just above max|A_ij|.
pub fn select_threshold(a: &Matrix, eps: f64) -> Result<ThresholdChoice> {
    if !(eps > 0.0) {
        return Err(Error::param(format!("eps must be positive, got {eps}")));
    }
    check_nonzero(a)?;
    let s = spectral::norms(a, false)?;
    let budget = eps * eps * s.frobenius_norm * s.frobenius_norm / s.stable_rank;

    let mut mags: Vec<f64> = a.nonzeros().map(|e| e.value.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let total: f64 = mags.iter().map(|x| x * x).sum();
    if total <= budget {
        return Ok(ThresholdChoice { delta: mags[mags.len() - 1].next_up(), lost_energy: total, budget });
    }

    // Candidate cutoff mags[k] (first of its run) zeroes mags[..k].
    let mut best = ThresholdChoice { delta: 0.0, lost_energy: 0.0, budget };
    let mut prefix = 0.0;
    for k in 0..mags.len() {
        if k == 0 || mags[k] != mags[k - 1] {
            if prefix > budget {
                break;
            }
            best = ThresholdChoice { delta: mags[k], lost_energy: prefix, budget };
        }
        prefix += mags[k] * mags[k];
    }
    Ok(best)
}
