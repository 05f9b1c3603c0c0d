//! Iterative spectral kernels: block power (subspace) iteration on symmetric
//! operators, truncated SVD through the Gram operator, and matrix norms.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, StreamRng};

/// Default relative residual tolerance for spectral iterations.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default iteration cap for spectral iterations.
pub const DEFAULT_MAX_ITER: usize = 5000;
/// Seed used where an API takes no seed (norms, deviations).
pub const INTERNAL_SEED: u64 = 0x5_EED0_FA11;
/// Up to this dimension, small symmetric problems are solved densely.
pub const DENSE_LIMIT: usize = 64;

/// A symmetric linear operator on R^n.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

/// x ↦ AᵀA x.
pub struct Gram<'a>(pub &'a Matrix);

impl SymmetricOperator for Gram<'_> {
    fn dim(&self) -> usize {
        self.0.cols()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.gram_apply(x).expect("gram operator length")
    }
}

/// x ↦ A Aᵀ x.
pub struct OuterGram<'a>(pub &'a Matrix);

impl SymmetricOperator for OuterGram<'_> {
    fn dim(&self) -> usize {
        self.0.rows()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.outer_gram_apply(x).expect("outer gram operator length")
    }
}

/// Dense symmetric operator, row-major.
pub struct DenseSymmetric {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Eigenpairs of a symmetric operator, ordered by decreasing |λ|.
#[derive(Debug, Clone)]
pub struct RitzPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// One singular triplet (σ, u, v) with `A v = σ u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Leading singular triplets plus convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSvd {
    pub triplets: Vec<SingularTriplet>,
    pub iterations: usize,
    /// max_i ‖AᵀA vᵢ − σᵢ² vᵢ‖.
    pub max_residual: f64,
    pub converged: bool,
}

impl TruncatedSvd {
    pub fn sigmas(&self) -> Vec<f64> {
        self.triplets.iter().map(|t| t.sigma).collect()
    }
}

/// Norm summary of a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub spectral_norm: f64,
    pub frobenius_norm: f64,
    pub l1_norm: f64,
    /// Smallest of the min(m,n) singular values; 0 when not computed.
    pub min_singular: f64,
    pub min_singular_computed: bool,
    /// ‖A‖_F² / ‖A‖₂², defined as 1 for the zero matrix.
    pub stable_rank: f64,
}

/// Flips `v` so its largest-magnitude coordinate (first on ties) is nonnegative.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Full eigendecomposition of a dense symmetric matrix, eigenvalues descending.
pub fn dense_symmetric_eigen(n: usize, data: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = DMatrix::from_row_slice(n, n, data);
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    (values, vectors)
}

/// Orthonormalizes the columns in place (two passes of modified Gram-Schmidt);
/// columns that collapse are replaced by fresh random directions.
fn orthonormalize(block: &mut [Vec<f64>], rng: &mut StreamRng) {
    let n = block.first().map_or(0, Vec::len);
    for c in 0..block.len() {
        let mut attempts = 0;
        loop {
            let original = norm(&block[c]);
            for _ in 0..2 {
                for p in 0..c {
                    let (done, rest) = block.split_at_mut(c);
                    let proj = dot(&done[p], &rest[0]);
                    rest[0].iter_mut().zip(&done[p]).for_each(|(x, q)| *x -= proj * q);
                }
            }
            let nrm = norm(&block[c]);
            if nrm > 1e-10 * original.max(f64::MIN_POSITIVE) && nrm > 1e-300 {
                block[c].iter_mut().for_each(|x| *x /= nrm);
                break;
            }
            attempts += 1;
            assert!(attempts < 64, "cannot complete orthonormal basis");
            block[c] = rng::unit_vector(rng, n);
        }
    }
}

/// Block power iteration with Rayleigh-Ritz for the `k` eigenpairs of largest
/// magnitude. Converged when every wanted pair has
/// ‖Op x − θ x‖ ≤ tol·|θ₁|.
///
/// On iteration budget exhaustion the pairs are returned with
/// `converged = false`.
pub fn subspace_eigs<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<RitzPairs> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::param(format!("need 1 <= k <= {n}, got {k}")));
    }
    let block_size = n.min(k + k.max(4));
    let mut rng = rng::seeded(seed);
    let mut q: Vec<Vec<f64>> = (0..block_size).map(|_| rng::unit_vector(&mut rng, n)).collect();
    orthonormalize(&mut q, &mut rng);

    let mut best: Option<RitzPairs> = None;
    for it in 1..=max_iter.max(1) {
        let w: Vec<Vec<f64>> = q.iter().map(|x| op.apply(x)).collect();
        let mut h = vec![0.0; block_size * block_size];
        for a in 0..block_size {
            for b in a..block_size {
                let v = 0.5 * (dot(&q[a], &w[b]) + dot(&q[b], &w[a]));
                h[a * block_size + b] = v;
                h[b * block_size + a] = v;
            }
        }
        let m = DMatrix::from_row_slice(block_size, block_size, &h);
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..block_size).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .abs()
                .total_cmp(&eig.eigenvalues[a].abs())
                .then(eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]))
        });

        let combine = |basis: &[Vec<f64>], col: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (r, b) in basis.iter().enumerate() {
                let c = eig.eigenvectors[(r, col)];
                if c != 0.0 {
                    out.iter_mut().zip(b).for_each(|(o, x)| *o += c * x);
                }
            }
            out
        };

        let mut xs = Vec::with_capacity(block_size);
        let mut ys = Vec::with_capacity(block_size);
        let mut thetas = Vec::with_capacity(block_size);
        for &col in &order {
            xs.push(combine(&q, col));
            ys.push(combine(&w, col));
            thetas.push(eig.eigenvalues[col]);
        }
        let residuals: Vec<f64> = (0..k)
            .map(|i| {
                let r: Vec<f64> = ys[i].iter().zip(&xs[i]).map(|(y, x)| y - thetas[i] * x).collect();
                norm(&r)
            })
            .collect();
        let scale = thetas[0].abs();
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        let converged = worst <= tol * scale;

        let candidate = RitzPairs {
            values: thetas[..k].to_vec(),
            vectors: xs[..k].to_vec(),
            residuals,
            iterations: it,
            converged,
        };
        let improves = best.as_ref().is_none_or(|b| {
            let bw = b.residuals.iter().copied().fold(0.0, f64::max);
            worst <= bw
        });
        if converged {
            return Ok(candidate);
        }
        if improves {
            best = Some(candidate);
        } else if let Some(b) = best.as_mut() {
            b.iterations = it;
        }
        q = ys;
        orthonormalize(&mut q, &mut rng);
    }
    Ok(best.expect("at least one iteration"))
}

/// Top-`k` singular triplets of `A` via block power iteration on `AᵀA`.
///
/// Right vectors are orthonormal, σ nonincreasing, and each vector carries the
/// sign convention of [`fix_sign`]. If the iteration budget runs out, the best
/// iterate is returned inside [`Error::NotConverged`].
pub fn top_singular_triplets(
    a: &Matrix,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<TruncatedSvd> {
    let (m, n) = a.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::param(format!("need 1 <= k <= min(m, n) = {}, got {k}", m.min(n))));
    }
    let pairs = subspace_eigs(&Gram(a), k, tol, max_iter, seed)?;
    let mut triplets = Vec::with_capacity(k);
    for (lambda, mut v) in pairs.values.iter().zip(pairs.vectors) {
        fix_sign(&mut v);
        let sigma = lambda.max(0.0).sqrt();
        let av = a.mul_vec(&v)?;
        let u = if sigma > 0.0 {
            av.iter().map(|x| x / sigma).collect()
        } else {
            vec![0.0; m]
        };
        triplets.push(SingularTriplet { sigma, u, v });
    }
    let svd = TruncatedSvd {
        triplets,
        iterations: pairs.iterations,
        max_residual: pairs.residuals.iter().copied().fold(0.0, f64::max),
        converged: pairs.converged,
    };
    if svd.converged {
        Ok(svd)
    } else {
        Err(Error::NotConverged(Box::new(svd)))
    }
}

/// ‖A‖₂, taking the best iterate if the iteration does not converge.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    let svd = top_singular_triplets(a, 1, DEFAULT_TOL, DEFAULT_MAX_ITER, INTERNAL_SEED)
        .or_else(Error::into_best_iterate)?;
    Ok(svd.triplets[0].sigma)
}

/// Smallest of the min(m,n) singular values.
///
/// Dense eigendecomposition of the smaller Gram matrix when min(m,n) ≤ 64,
/// otherwise power iteration on the shifted operator c·I − G with
/// c = ‖A‖₂² + 1.
pub fn min_singular(a: &Matrix) -> Result<f64> {
    let (m, n) = a.shape();
    let small = m.min(n);
    let at;
    let tall = if m >= n {
        a
    } else {
        at = a.transpose();
        &at
    };
    if small <= DENSE_LIMIT {
        let g = tall.gram_dense();
        let (values, _) = dense_symmetric_eigen(small, &g);
        return Ok(values[small - 1].max(0.0).sqrt());
    }
    let c = spectral_norm(a)?.powi(2) + 1.0;
    struct Shifted<'a> {
        gram: Gram<'a>,
        c: f64,
    }
    impl SymmetricOperator for Shifted<'_> {
        fn dim(&self) -> usize {
            self.gram.dim()
        }
        fn apply(&self, x: &[f64]) -> Vec<f64> {
            let g = self.gram.apply(x);
            x.iter().zip(g).map(|(xi, gi)| self.c * xi - gi).collect()
        }
    }
    let pairs = subspace_eigs(&Shifted { gram: Gram(tall), c }, 1, 1e-12, DEFAULT_MAX_ITER, INTERNAL_SEED)?;
    Ok((c - pairs.values[0]).max(0.0).sqrt())
}

/// Norm summary. The spectral norm comes from power iteration on the Gram
/// operator; σ_min only when requested.
pub fn norms(a: &Matrix, compute_min_singular: bool) -> Result<SpectralSummary> {
    let spectral_norm = spectral_norm(a)?;
    let frobenius_norm = a.frobenius_norm();
    let l1_norm = a.l1_norm();
    let stable_rank = if spectral_norm > 0.0 {
        (frobenius_norm * frobenius_norm) / (spectral_norm * spectral_norm)
    } else {
        1.0
    };
    let min_singular = if compute_min_singular { min_singular(a)? } else { 0.0 };
    Ok(SpectralSummary {
        spectral_norm,
        frobenius_norm,
        l1_norm,
        min_singular,
        min_singular_computed: compute_min_singular,
        stable_rank,
    })
}
