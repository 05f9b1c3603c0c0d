//! Sparse principal components and the variance metric.
//!
//! All solvers work on the Gram operator x ↦ AᵀA x. The variance of a
//! component set is always measured against the matrix passed to
//! [`variance`], independent of which matrix produced the loadings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::sketch::gram_difference_norm;
use crate::spectral::{self, dot, norm, Gram, SymmetricOperator, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpcaMethod {
    Exact,
    MaxR,
    IterSparse,
    BruteForce,
}

/// n×k loadings stored as k columns of length n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSet {
    pub loadings: Vec<Vec<f64>>,
    /// Per-column sparsity cap; equals n when unconstrained.
    pub r: usize,
    pub method: SpcaMethod,
    pub converged: bool,
}

impl ComponentSet {
    pub fn k(&self) -> usize {
        self.loadings.len()
    }

    pub fn n(&self) -> usize {
        self.loadings.first().map_or(0, Vec::len)
    }

    /// Row-major n×k copy of the loadings.
    pub fn to_row_major(&self) -> Vec<f64> {
        let (n, k) = (self.n(), self.k());
        let mut out = vec![0.0; n * k];
        for (c, col) in self.loadings.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                out[i * k + c] = x;
            }
        }
        out
    }
}

/// Σ over columns v of ‖A v‖².
pub fn variance(a: &Matrix, v: &ComponentSet) -> Result<f64> {
    let mut total = 0.0;
    for col in &v.loadings {
        if col.len() != a.cols() {
            return Err(Error::dim(format!("loading length {} != cols {}", col.len(), a.cols())));
        }
        let av = a.mul_vec(col)?;
        total += dot(&av, &av);
    }
    Ok(total)
}

/// Top-`k` right singular vectors.
pub fn exact_pca(a: &Matrix, k: usize, seed: u64) -> Result<ComponentSet> {
    let svd = spectral::top_singular_triplets(a, k, DEFAULT_TOL, DEFAULT_MAX_ITER, seed)?;
    Ok(ComponentSet {
        loadings: svd.triplets.into_iter().map(|t| t.v).collect(),
        r: a.cols(),
        method: SpcaMethod::Exact,
        converged: true,
    })
}

/// Keeps the `r` largest-magnitude coordinates (ties to the lower index).
pub fn keep_top_r(x: &[f64], r: usize) -> Vec<f64> {
    if r >= x.len() {
        return x.to_vec();
    }
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut out = vec![0.0; x.len()];
    for &i in &idx[..r] {
        out[i] = x[i];
    }
    out
}

fn normalized(mut x: Vec<f64>) -> Option<Vec<f64>> {
    let nrm = norm(&x);
    if nrm > 0.0 && nrm.is_finite() {
        x.iter_mut().for_each(|v| *v /= nrm);
        Some(x)
    } else {
        None
    }
}

/// Per column: keep the `r` largest magnitudes and rescale to unit norm.
pub fn truncate_components(v: &ComponentSet, r: usize) -> Result<ComponentSet> {
    let n = v.n();
    if r == 0 || r > n {
        return Err(Error::param(format!("r must lie in [1, {n}], got {r}")));
    }
    let loadings = v
        .loadings
        .iter()
        .map(|col| normalized(keep_top_r(col, r)).ok_or_else(|| Error::Degenerate("zero loading column".into())))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComponentSet { loadings, r, method: SpcaMethod::MaxR, converged: v.converged })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterSparseOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterSparseOptions {
    fn default() -> Self {
        Self { restarts: 8, tol: 1e-9, max_iter: 2000 }
    }
}

/// x ↦ (I − QQᵀ) AᵀA (I − QQᵀ) x for an orthonormal basis Q of the found components.
struct Deflated<'a> {
    gram: Gram<'a>,
    basis: Vec<Vec<f64>>,
}

impl Deflated<'_> {
    fn project(&self, x: &mut [f64]) {
        for q in &self.basis {
            let c = dot(q, x);
            x.iter_mut().zip(q).for_each(|(xi, qi)| *xi -= c * qi);
        }
    }
}

impl SymmetricOperator for Deflated<'_> {
    fn dim(&self) -> usize {
        self.gram.dim()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.project(&mut y);
        let mut z = self.gram.apply(&y);
        self.project(&mut z);
        z
    }
}

struct PowerRun {
    vector: Vec<f64>,
    objective: f64,
    converged: bool,
}

/// Truncated power iteration v ← normalize(keep_top_r(Op v)) from an r-sparse unit start.
fn truncated_power<O: SymmetricOperator>(op: &O, start: Vec<f64>, r: usize, tol: f64, max_iter: usize) -> PowerRun {
    let mut v = start;
    let mut w = op.apply(&v);
    let mut f = dot(&v, &w);
    for _ in 0..max_iter {
        let Some(next) = normalized(keep_top_r(&w, r)) else {
            return PowerRun { vector: v, objective: f, converged: true };
        };
        let next_w = op.apply(&next);
        let next_f = dot(&next, &next_w);
        debug_assert!(
            next_f >= f - 1e-10 * f.abs().max(1e-300),
            "truncated power objective decreased: {f} -> {next_f}"
        );
        let change = (next_f - f).abs();
        v = next;
        w = next_w;
        f = next_f;
        if change <= tol * f.abs() {
            return PowerRun { vector: v, objective: f, converged: true };
        }
    }
    PowerRun { vector: v, objective: f, converged: false }
}

/// r-sparse components by multi-start truncated power iteration.
///
/// Each component takes the best of one warm start (the truncated leading
/// eigenvector of the current operator) and `restarts` random starts.
/// Components after the first use projection deflation against the span of
/// the earlier ones.
pub fn iter_sparse_pca(a: &Matrix, k: usize, r: usize, opts: IterSparseOptions, seed: u64) -> Result<ComponentSet> {
    let n = a.cols();
    if r == 0 || r > n {
        return Err(Error::param(format!("r must lie in [1, {n}], got {r}")));
    }
    if k == 0 || k > a.rows().min(n) {
        return Err(Error::param(format!("k must lie in [1, {}], got {k}", a.rows().min(n))));
    }
    if opts.restarts == 0 {
        return Err(Error::param("restarts must be at least 1"));
    }
    let mut found: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut all_converged = true;
    for c in 0..k {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(c);
        for v in &found {
            let mut q = v.clone();
            for b in &basis {
                let p = dot(b, &q);
                q.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
            if let Some(q) = normalized(q) {
                basis.push(q);
            }
        }
        let op = Deflated { gram: Gram(a), basis };
        let comp_seed = rng::derive_seed(seed, c as u64);

        let warm = if c == 0 {
            exact_pca(a, 1, seed)
                .map(|e| e.loadings.into_iter().next().expect("one component"))
                .or_else(|e| e.into_best_iterate().map(|b| b.triplets[0].v.clone()))?
        } else {
            let pairs = spectral::subspace_eigs(&op, 1, DEFAULT_TOL, DEFAULT_MAX_ITER, comp_seed)?;
            pairs.vectors[0].clone()
        };

        let mut starts = Vec::with_capacity(opts.restarts + 1);
        starts.push(warm);
        for j in 0..opts.restarts {
            let mut g = rng::stream(comp_seed, j as u64 + 1);
            starts.push(rng::unit_vector(&mut g, n));
        }
        let runs: Vec<PowerRun> = starts
            .into_par_iter()
            .map(|s| {
                let s = normalized(keep_top_r(&s, r)).unwrap_or_else(|| {
                    let mut e = vec![0.0; n];
                    e[0] = 1.0;
                    e
                });
                truncated_power(&op, s, r, opts.tol, opts.max_iter)
            })
            .collect();
        let mut best = 0;
        for (i, run) in runs.iter().enumerate().skip(1) {
            if run.objective > runs[best].objective {
                best = i;
            }
        }
        let run = &runs[best];
        all_converged &= run.converged;
        let mut v = run.vector.clone();
        spectral::fix_sign(&mut v);
        found.push(v);
    }
    Ok(ComponentSet { loadings: found, r, method: SpcaMethod::IterSparse, converged: all_converged })
}

/// Enumeration limits for [`brute_force_spca`].
pub const BRUTE_MAX_N: usize = 16;
pub const BRUTE_MAX_SUPPORTS: u128 = 10_000;
pub const BRUTE_MAX_PAIRS: u128 = 1_000_000;

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All size-`r` subsets of 0..n in lexicographic order.
fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..r).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..r).rev().find(|&i| cur[i] != i + n - r) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..r {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn principal_submatrix(gram: &[f64], n: usize, support: &[usize]) -> Vec<f64> {
    support.iter().flat_map(|&a| support.iter().map(move |&b| gram[a * n + b])).collect()
}

fn embed(n: usize, support: &[usize], values: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for (&i, &x) in support.iter().zip(values) {
        v[i] = x;
    }
    spectral::fix_sign(&mut v);
    v
}

/// Exact sparse PCA by enumeration, for small `n`.
///
/// k = 1: the best principal r×r submatrix of AᵀA and its top eigenvector.
///
/// k = 2: the exact optimum over two-column loadings whose supports are
/// either identical (top-2 eigenvectors of one r×r submatrix) or disjoint
/// (top eigenvector of each of two submatrices). Both shapes are
/// orthonormal by construction; overlapping-but-unequal supports are not
/// searched. Ties go to the lexicographically first support.
pub fn brute_force_spca(a: &Matrix, k: usize, r: usize) -> Result<ComponentSet> {
    let n = a.cols();
    if r == 0 || r > n {
        return Err(Error::param(format!("r must lie in [1, {n}], got {r}")));
    }
    if k == 0 || k > 2 || k > n {
        return Err(Error::SizeGuard(format!("brute force supports k in {{1, 2}} with k <= n, got k = {k}")));
    }
    if n > BRUTE_MAX_N {
        return Err(Error::SizeGuard(format!("n = {n} exceeds {BRUTE_MAX_N}")));
    }
    let supports_count = binomial(n, r);
    if supports_count > BRUTE_MAX_SUPPORTS {
        return Err(Error::SizeGuard(format!("C({n}, {r}) = {supports_count} exceeds {BRUTE_MAX_SUPPORTS}")));
    }
    if k == 2 {
        let pairs = supports_count * binomial(n - r, r);
        if pairs > BRUTE_MAX_PAIRS {
            return Err(Error::SizeGuard(format!("{pairs} support pairs exceed {BRUTE_MAX_PAIRS}")));
        }
    }

    let gram = a.gram_dense();
    let supports = combinations(n, r);
    let eigs: Vec<(Vec<f64>, Vec<Vec<f64>>)> = supports
        .iter()
        .map(|s| spectral::dense_symmetric_eigen(r, &principal_submatrix(&gram, n, s)))
        .collect();

    let mut best_value = f64::NEG_INFINITY;
    let mut best: Vec<Vec<f64>> = Vec::new();
    if k == 1 {
        for (s, (vals, vecs)) in supports.iter().zip(&eigs) {
            if vals[0] > best_value {
                best_value = vals[0];
                best = vec![embed(n, s, &vecs[0])];
            }
        }
    } else {
        if r >= 2 {
            for (s, (vals, vecs)) in supports.iter().zip(&eigs) {
                let value = vals[0] + vals[1];
                if value > best_value {
                    best_value = value;
                    best = vec![embed(n, s, &vecs[0]), embed(n, s, &vecs[1])];
                }
            }
        }
        for (p, sp) in supports.iter().enumerate() {
            for (q, sq) in supports.iter().enumerate().skip(p + 1) {
                if sp.iter().any(|i| sq.contains(i)) {
                    continue;
                }
                let value = eigs[p].0[0] + eigs[q].0[0];
                if value > best_value {
                    best_value = value;
                    let (first, second) = if eigs[p].0[0] >= eigs[q].0[0] { (p, q) } else { (q, p) };
                    best = vec![
                        embed(n, &supports[first], &eigs[first].1[0]),
                        embed(n, &supports[second], &eigs[second].1[0]),
                    ];
                }
            }
        }
        if best.is_empty() {
            return Err(Error::SizeGuard(format!("no two-column loading with r = {r} fits n = {n}")));
        }
    }
    Ok(ComponentSet { loadings: best, r, method: SpcaMethod::BruteForce, converged: true })
}

/// Deficit of sketch-derived optimal sparse components against the bound
/// 2k‖AᵀA − ÃᵀÃ‖₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchGap {
    /// f(A, S_k) − f(A, S̃_k).
    pub lhs_deficit: f64,
    /// 2k·‖AᵀA − ÃᵀÃ‖₂.
    pub bound: f64,
    pub gram_diff: f64,
    pub f_optimal: f64,
    pub f_from_sketch: f64,
}

impl SketchGap {
    pub fn holds(&self) -> bool {
        self.lhs_deficit <= self.bound
    }
}

/// Compares brute-force sparse PCA on `a` and on `sketch`, both scored against `a`.
pub fn theorem1_gap(a: &Matrix, sketch: &Matrix, k: usize, r: usize) -> Result<SketchGap> {
    if a.shape() != sketch.shape() {
        return Err(Error::dim(format!("shape mismatch {:?} vs {:?}", a.shape(), sketch.shape())));
    }
    let optimal = brute_force_spca(a, k, r)?;
    let from_sketch = brute_force_spca(sketch, k, r)?;
    let f_optimal = variance(a, &optimal)?;
    let f_from_sketch = variance(a, &from_sketch)?;
    let gram_diff = gram_difference_norm(a, sketch)?;
    Ok(SketchGap {
        lhs_deficit: f_optimal - f_from_sketch,
        bound: 2.0 * k as f64 * gram_diff,
        gram_diff,
        f_optimal,
        f_from_sketch,
    })
}

/// 2kε‖A‖₂²(2 + ε), the deficit bound for thresholded sketches.
pub fn thresholding_bound(spectral_norm: f64, eps: f64, k: usize) -> f64 {
    2.0 * k as f64 * eps * spectral_norm * spectral_norm * (2.0 + eps)
}
