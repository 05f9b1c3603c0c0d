//! Synthetic data matrices.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, StreamRng};

/// Generator name plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Generator {
    /// Low-rank Gaussian template multiplied entrywise by Pareto factors
    /// u^(−exponent), u ~ U(0, 1]; a larger exponent gives heavier spikes.
    SpikyPowerlaw { m: usize, n: usize, rank: usize, exponent: f64 },
    /// Rank-ρ Gaussian product plus i.i.d. Gaussian noise of the given scale.
    LowRankNoise { m: usize, n: usize, rank: usize, noise: f64 },
    /// Rows are noisy ±1 images drawn from a few smooth block patterns;
    /// every |entry| lies in [0.8, 1].
    BinaryPixel { m: usize, n: usize },
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::SpikyPowerlaw { .. } => "spiky_powerlaw",
            Generator::LowRankNoise { .. } => "low_rank_noise",
            Generator::BinaryPixel { .. } => "binary_pixel",
        }
    }
}

fn check_dims(m: usize, n: usize, rank: Option<usize>) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::param(format!("dimensions must be positive, got {m}x{n}")));
    }
    if let Some(r) = rank {
        if r == 0 || r > m.min(n) {
            return Err(Error::param(format!("rank must lie in [1, {}], got {r}", m.min(n))));
        }
    }
    Ok(())
}

fn gaussian_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// U Vᵀ/√rank for Gaussian U (m×rank) and V (n×rank).
fn low_rank_template(rng: &mut StreamRng, m: usize, n: usize, rank: usize) -> Vec<f64> {
    let u = gaussian_matrix(rng, m, rank);
    let v = gaussian_matrix(rng, n, rank);
    let scale = 1.0 / (rank as f64).sqrt();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[i * n + j] = scale * (0..rank).map(|t| u[i * rank + t] * v[j * rank + t]).sum::<f64>();
        }
    }
    out
}

pub fn generate(g: &Generator, seed: u64) -> Result<Matrix> {
    let mut rng = rng::seeded(seed);
    match *g {
        Generator::SpikyPowerlaw { m, n, rank, exponent } => {
            check_dims(m, n, Some(rank))?;
            if !(exponent.is_finite() && exponent >= 0.0) {
                return Err(Error::param(format!("exponent must be finite and nonnegative, got {exponent}")));
            }
            let mut t = low_rank_template(&mut rng, m, n, rank);
            for x in &mut t {
                let u = 1.0 - rng.random::<f64>();
                *x *= u.powf(-exponent);
            }
            Matrix::dense(m, n, t)
        }
        Generator::LowRankNoise { m, n, rank, noise } => {
            check_dims(m, n, Some(rank))?;
            if !(noise.is_finite() && noise >= 0.0) {
                return Err(Error::param(format!("noise must be finite and nonnegative, got {noise}")));
            }
            let mut t = low_rank_template(&mut rng, m, n, rank);
            if noise > 0.0 {
                for x in &mut t {
                    *x += noise * rng.sample::<f64, _>(StandardNormal);
                }
            }
            Matrix::dense(m, n, t)
        }
        Generator::BinaryPixel { m, n } => {
            check_dims(m, n, None)?;
            let width = (n as f64).sqrt().ceil() as usize;
            let classes = 10;
            let patterns: Vec<(f64, f64, f64, f64)> = (0..classes)
                .map(|_| {
                    let tau = std::f64::consts::TAU;
                    (
                        rng.random_range(0.5..2.5) * tau / width as f64,
                        rng.random_range(0.5..2.5) * tau / width as f64,
                        rng.random_range(0.0..tau),
                        rng.random_range(0.0..tau),
                    )
                })
                .collect();
            let mut d = vec![0.0; m * n];
            for i in 0..m {
                let (fx, fy, px, py) = patterns[rng.random_range(0..classes)];
                for j in 0..n {
                    let (x, y) = ((j % width) as f64, (j / width) as f64);
                    let mut sign = if (fx * x + px).sin() * (fy * y + py).cos() >= 0.0 { 1.0 } else { -1.0 };
                    if rng.random::<f64>() < 0.05 {
                        sign = -sign;
                    }
                    d[i * n + j] = sign * (0.8 + 0.2 * rng.random::<f64>());
                }
            }
            Matrix::dense(m, n, d)
        }
    }
}
