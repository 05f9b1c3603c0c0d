//! Choice of the hybrid mixing parameter α and theoretical sample sizes.
//!
//! For α ∈ (0, 1] and each nonzero A_ij,
//!
//! ```text
//! ξ_ij(α) = ‖A‖_F² / (α‖A‖_F² / (|A_ij|·‖A‖₁) + (1 − α))   (= A_ij² / p_ij)
//! ρ²(α)   = max{ max_i Σ_j ξ_ij, max_j Σ_i ξ_ij } − σ_min²(A)
//! γ(α)    = max_ij ‖A‖₁ / (α + (1 − α)·‖A‖₁·|A_ij| / ‖A‖_F²) + ‖A‖₂
//! ```
//!
//! and α* minimizes ρ²(α) + γ(α)·ε·‖A‖₂/3. Both ρ² and γ are convex in α,
//! so a grid scan followed by golden-section refinement finds the minimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sketch::SamplingDistribution;
use crate::spectral::{self, DENSE_LIMIT};

/// Default grid: 100 points on [0.01, 1].
pub const DEFAULT_GRID_LO: f64 = 0.01;
pub const DEFAULT_GRID_HI: f64 = 1.0;
pub const DEFAULT_GRID_STEPS: usize = 100;
/// Golden-section search stops when the bracket is shorter than this.
pub const REFINE_TOL: f64 = 1e-4;
/// Objective values within this relative gap count as ties.
const TIE_RTOL: f64 = 1e-12;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Per-matrix quantities shared by every α evaluation.
#[derive(Debug, Clone)]
pub struct MixingContext {
    rows: usize,
    cols: usize,
    /// (row, col, |A_ij|) over nonzeros.
    magnitudes: Vec<(usize, usize, f64)>,
    l1: f64,
    fro_sq: f64,
    min_abs: f64,
    spectral_norm: f64,
}

impl MixingContext {
    pub fn new(a: &Matrix) -> Result<Self> {
        let magnitudes: Vec<(usize, usize, f64)> = a.nonzeros().map(|e| (e.row, e.col, e.value.abs())).collect();
        if magnitudes.is_empty() {
            return Err(Error::Degenerate("matrix has no nonzero entries".into()));
        }
        let l1 = magnitudes.iter().map(|x| x.2).sum();
        let fro_sq = magnitudes.iter().map(|x| x.2 * x.2).sum();
        let min_abs = magnitudes.iter().map(|x| x.2).fold(f64::INFINITY, f64::min);
        Ok(Self {
            rows: a.rows(),
            cols: a.cols(),
            magnitudes,
            l1,
            fro_sq,
            min_abs,
            spectral_norm: spectral::spectral_norm(a)?,
        })
    }

    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm
    }

    fn xi_value(&self, magnitude: f64, alpha: f64) -> f64 {
        self.fro_sq / (alpha * self.fro_sq / (magnitude * self.l1) + (1.0 - alpha))
    }

    pub fn xi(&self, alpha: f64) -> Result<Vec<(usize, usize, f64)>> {
        check_alpha(alpha)?;
        Ok(self.magnitudes.iter().map(|&(i, j, x)| (i, j, self.xi_value(x, alpha))).collect())
    }

    /// Largest row or column sum of ξ, one pass over the nonzeros.
    fn max_xi_sum(&self, alpha: f64) -> f64 {
        let mut row_sums = vec![0.0; self.rows];
        let mut col_sums = vec![0.0; self.cols];
        for &(i, j, x) in &self.magnitudes {
            let xi = self.xi_value(x, alpha);
            row_sums[i] += xi;
            col_sums[j] += xi;
        }
        row_sums.into_iter().chain(col_sums).fold(0.0, f64::max)
    }

    pub fn rho_squared(&self, alpha: f64, sigma_min_sq: f64) -> Result<f64> {
        check_alpha(alpha)?;
        if !(sigma_min_sq >= 0.0) {
            return Err(Error::param(format!("sigma_min_sq must be nonnegative, got {sigma_min_sq}")));
        }
        Ok(self.max_xi_sum(alpha) - sigma_min_sq)
    }

    /// The maximum sits at the smallest nonzero magnitude.
    pub fn gamma(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let t = self.l1 * self.min_abs / self.fro_sq;
        Ok(self.l1 / (alpha + (1.0 - alpha) * t) + self.spectral_norm)
    }

    /// ρ²(α) + γ(α)·ε·‖A‖₂/3.
    pub fn objective(&self, alpha: f64, eps: f64, sigma_min_sq: f64) -> Result<f64> {
        Ok(self.rho_squared(alpha, sigma_min_sq)? + self.gamma(alpha)? * eps * self.spectral_norm / 3.0)
    }
}

/// ξ_ij for each nonzero of `a`.
pub fn xi(a: &Matrix, alpha: f64) -> Result<Vec<(usize, usize, f64)>> {
    check_alpha(alpha)?;
    MixingContext::new(a)?.xi(alpha)
}

pub fn rho_squared(a: &Matrix, alpha: f64, sigma_min_sq: f64) -> Result<f64> {
    check_alpha(alpha)?;
    MixingContext::new(a)?.rho_squared(alpha, sigma_min_sq)
}

pub fn gamma(a: &Matrix, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    MixingContext::new(a)?.gamma(alpha)
}

/// How σ_min² enters ρ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum SigmaMinMode {
    /// Use 0 (larger ρ², conservative).
    Skip,
    /// Compute the min(m,n)-th singular value.
    Exact,
    /// Exact when min(m,n) ≤ 64, otherwise skip.
    Auto,
    Given(f64),
}

/// Resolves σ_min² for `a`; the flag reports whether it was actually computed.
pub fn resolve_sigma_min_sq(a: &Matrix, mode: SigmaMinMode) -> Result<(f64, bool)> {
    let exact = |a: &Matrix| spectral::min_singular(a).map(|s| (s * s, true));
    match mode {
        SigmaMinMode::Skip => Ok((0.0, false)),
        SigmaMinMode::Exact => exact(a),
        SigmaMinMode::Auto if a.rows().min(a.cols()) <= DENSE_LIMIT => exact(a),
        SigmaMinMode::Auto => Ok((0.0, false)),
        SigmaMinMode::Given(v) if v >= 0.0 => Ok((v, true)),
        SigmaMinMode::Given(v) => Err(Error::param(format!("sigma_min_sq must be nonnegative, got {v}"))),
    }
}

/// Grid evaluation and refined minimizer of the α objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub alpha_grid: Vec<f64>,
    pub objective_values: Vec<f64>,
    pub alpha_star: f64,
    pub objective_at_star: f64,
    pub rho2_at_star: f64,
    pub gamma_at_star: f64,
    pub eps: f64,
    pub sigma_min_sq: f64,
    pub spectral_norm: f64,
}

impl MixingProfile {
    /// (ρ²/‖A‖₂², γ/‖A‖₂), the scale-free forms the sample bound expects.
    pub fn dimensionless(&self) -> (f64, f64) {
        let s = self.spectral_norm;
        (self.rho2_at_star / (s * s), self.gamma_at_star / s)
    }

    /// Sample size for this profile's α* at failure probability `delta`.
    pub fn sample_complexity(&self, delta: f64, rows: usize, cols: usize, k: usize) -> Result<u64> {
        let (rho2, gamma) = self.dimensionless();
        sample_complexity(rho2, gamma, self.eps, delta, rows, cols, k)
    }
}

/// Minimizes ρ²(α) + γ(α)·ε·‖A‖₂/3 over [grid_lo, grid_hi]: uniform grid
/// scan, then golden-section search on the bracket around the best grid
/// point. Ties go to the smaller α.
pub fn optimize_alpha(
    a: &Matrix,
    eps: f64,
    grid_lo: f64,
    grid_hi: f64,
    grid_steps: usize,
    sigma_min_sq: f64,
) -> Result<MixingProfile> {
    let ctx = MixingContext::new(a)?;
    optimize_alpha_with(&ctx, eps, grid_lo, grid_hi, grid_steps, sigma_min_sq)
}

pub fn optimize_alpha_with(
    ctx: &MixingContext,
    eps: f64,
    grid_lo: f64,
    grid_hi: f64,
    grid_steps: usize,
    sigma_min_sq: f64,
) -> Result<MixingProfile> {
    if !(eps > 0.0) {
        return Err(Error::param(format!("eps must be positive, got {eps}")));
    }
    if !(grid_lo > 0.0 && grid_lo < grid_hi && grid_hi <= 1.0) {
        return Err(Error::param(format!("need 0 < grid_lo < grid_hi <= 1, got [{grid_lo}, {grid_hi}]")));
    }
    if grid_steps < 2 {
        return Err(Error::param("grid_steps must be at least 2"));
    }
    let f = |alpha: f64| ctx.objective(alpha, eps, sigma_min_sq);

    let step = (grid_hi - grid_lo) / (grid_steps - 1) as f64;
    let alpha_grid: Vec<f64> = (0..grid_steps)
        .map(|i| if i + 1 == grid_steps { grid_hi } else { grid_lo + i as f64 * step })
        .collect();
    let objective_values = alpha_grid.iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;

    let mut best = 0;
    for (i, &v) in objective_values.iter().enumerate().skip(1) {
        if v < objective_values[best] - TIE_RTOL * objective_values[best].abs() {
            best = i;
        }
    }
    let mut alpha_star = alpha_grid[best];
    let mut objective_at_star = objective_values[best];

    let lo = alpha_grid[best.saturating_sub(1)];
    let hi = alpha_grid[(best + 1).min(grid_steps - 1)];
    let (refined, refined_value) = golden_section(&f, lo, hi, REFINE_TOL)?;
    if refined_value < objective_at_star - TIE_RTOL * objective_at_star.abs() {
        alpha_star = refined;
        objective_at_star = refined_value;
    }

    Ok(MixingProfile {
        alpha_grid,
        objective_values,
        alpha_star,
        objective_at_star,
        rho2_at_star: ctx.rho_squared(alpha_star, sigma_min_sq)?,
        gamma_at_star: ctx.gamma(alpha_star)?,
        eps,
        sigma_min_sq,
        spectral_norm: ctx.spectral_norm,
    })
}

fn golden_section(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// s = ⌈(2k²/ε²)(ρ² + εγ/(3k))·ln((m+n)/δ)⌉.
///
/// With k = 1 this is the single-sketch spectral bound; for k > 1 it equals
/// that bound evaluated at accuracy ε/k.
pub fn sample_complexity(
    rho2: f64,
    gamma: f64,
    eps: f64,
    delta: f64,
    rows: usize,
    cols: usize,
    k: usize,
) -> Result<u64> {
    if !(rho2 >= 0.0) || !(gamma > 0.0) || !(eps > 0.0) || !(delta > 0.0) {
        return Err(Error::param(format!(
            "need rho2 >= 0 and gamma, eps, delta > 0 (got {rho2}, {gamma}, {eps}, {delta})"
        )));
    }
    if rows == 0 || cols == 0 || k == 0 {
        return Err(Error::param("rows, cols and k must be positive"));
    }
    let dims = (rows + cols) as f64;
    if delta >= dims {
        return Err(Error::param(format!("delta must be below m + n = {dims}")));
    }
    let k = k as f64;
    let s = (2.0 * k * k / (eps * eps)) * (rho2 + eps * gamma / (3.0 * k)) * (dims / delta).ln();
    if !s.is_finite() || s > u64::MAX as f64 {
        return Err(Error::param(format!("sample bound overflows: {s}")));
    }
    Ok(s.ceil().max(1.0) as u64)
}

/// Checks ξ_ij·p_ij = A_ij² for a hybrid distribution; returns the largest
/// relative deviation.
pub fn xi_identity_error(a: &Matrix, dist: &SamplingDistribution, alpha: f64) -> Result<f64> {
    let table = xi(a, alpha)?;
    let mut worst: f64 = 0.0;
    for (i, j, x) in table {
        let v = a.get(i, j);
        let p = dist.probability(i, j);
        worst = worst.max((x * p - v * v).abs() / (v * v));
    }
    Ok(worst)
}
