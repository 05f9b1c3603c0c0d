//! Test oracles written independently of the library's numerics.
#![allow(dead_code)]

use elemsketch::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Dense m×n matrix with entries uniform in [-1, 1].
pub fn random_dense(m: usize, n: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    Matrix::dense(m, n, (0..m * n).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Row-major AᵀA computed by explicit triple loop.
pub fn gram(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = (0..m).map(|t| a[t * n + i] * a[t * n + j]).sum();
        }
    }
    g
}

/// Cyclic Jacobi eigen-decomposition of a symmetric n×n matrix.
/// Returns eigenvalues in descending order with matching column eigenvectors.
pub fn jacobi_eigen(s: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut a = s.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j].powi(2)).sum();
        if off.sqrt() < 1e-15 * (1.0 + a.iter().map(|x| x * x).sum::<f64>().sqrt()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    (values, vectors)
}

/// Singular values of A (descending) via Jacobi on AᵀA.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    let (m, n) = a.shape();
    let (vals, _) = jacobi_eigen(&gram(&a.to_dense_vec(), m, n), n);
    vals.into_iter().map(|x| x.max(0.0).sqrt()).collect()
}

/// Largest |eigenvalue| of a symmetric matrix.
pub fn sym_norm(s: &[f64], n: usize) -> f64 {
    let (vals, _) = jacobi_eigen(s, n);
    vals[0].abs().max(vals[n - 1].abs())
}

/// k=1 sparse PCA optimum by enumerating every size-r support.
pub fn brute_force_k1(a: &Matrix, r: usize) -> f64 {
    let (m, n) = a.shape();
    let g = gram(&a.to_dense_vec(), m, n);
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != r {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let sub: Vec<f64> = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| g[i * n + j]).collect();
        let (vals, _) = jacobi_eigen(&sub, r);
        best = best.max(vals[0]);
    }
    best
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn orthonormal_pair(len: usize, r: &mut ChaCha20Rng) -> (Vec<f64>, Vec<f64>) {
    let unit = |mut x: Vec<f64>| {
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
        x
    };
    let a = unit((0..len).map(|_| r.random_range(-1.0..1.0)).collect());
    let mut b: Vec<f64> = (0..len).map(|_| r.random_range(-1.0..1.0)).collect();
    let p: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    b.iter_mut().zip(&a).for_each(|(y, x)| *y -= p * x);
    (a, unit(b))
}

/// u₁v₁ᵀ + 0.9·u₂v₂ᵀ + 0.01·noise: ‖A‖₂ ≈ 1, stable rank ≈ 2.
pub fn stable_rank_two(m: usize, n: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let (u1, u2) = orthonormal_pair(m, &mut r);
    let (v1, v2) = orthonormal_pair(n, &mut r);
    let mut d = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            d[i * n + j] = u1[i] * v1[j] + 0.9 * u2[i] * v2[j] + 0.01 * r.random_range(-1.0..1.0);
        }
    }
    Matrix::dense(m, n, d).unwrap()
}
