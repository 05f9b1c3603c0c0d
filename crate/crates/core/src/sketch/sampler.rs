//! i.i.d. element sampling with replacement and rescaling.
//!
//! Trial `t` reads ChaCha8 words `[4t, 4t + 4)` of stream 0 for `seed`, so
//! the drawn sequence does not depend on how trials are split across
//! threads. Repeated hits are tallied as integer counts, which makes the
//! merged sketch independent of split granularity.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use super::distribution::{DistributionDescriptor, SamplingDistribution, SupportKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Trials per independently seeked chunk.
const CHUNK: u64 = 1 << 15;
const WORDS_PER_TRIAL: u128 = 4;

/// A sampled sketch and its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchResult {
    pub sketch: Matrix,
    pub s: u64,
    pub seed: u64,
    pub distribution: DistributionDescriptor,
    pub distinct_entries_hit: usize,
}

/// Serializable summary of a [`SketchResult`] (without the matrix).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchSummary {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub s: u64,
    pub seed: u64,
    pub distribution: DistributionDescriptor,
    pub distinct_entries_hit: usize,
}

impl SketchResult {
    pub fn summary(&self) -> SketchSummary {
        SketchSummary {
            rows: self.sketch.rows(),
            cols: self.sketch.cols(),
            nnz: self.sketch.nnz(),
            s: self.s,
            seed: self.seed,
            distribution: self.distribution,
            distinct_entries_hit: self.distinct_entries_hit,
        }
    }
}

/// Values of `a` on the support cells of `dist`, after checking that the two agree.
fn support_values(a: &Matrix, dist: &SamplingDistribution) -> Result<Vec<f64>> {
    if a.shape() != dist.shape() {
        return Err(Error::Consistency(format!(
            "distribution built for {:?}, matrix is {:?}",
            dist.shape(),
            a.shape()
        )));
    }
    let cols = a.cols();
    let values: Vec<f64> = dist.cells().iter().map(|&c| a.get(c / cols, c % cols)).collect();
    match dist.support_kind() {
        SupportKind::NonzerosOnly => {
            if values.len() != a.nnz() || values.contains(&0.0) {
                return Err(Error::Consistency(
                    "distribution support does not match the nonzeros of the matrix".into(),
                ));
            }
        }
        SupportKind::AllEntries => {
            if values.len() != a.rows() * a.cols() {
                return Err(Error::Consistency("distribution does not cover all entries".into()));
            }
        }
    }
    if dist.probabilities().iter().any(|p| !(*p > 0.0)) {
        return Err(Error::Consistency("nonpositive probability on the support".into()));
    }
    Ok(values)
}

/// Builds Ã from per-support-cell hit counts: Ã_ij = count·A_ij/(s·p_ij).
fn assemble(
    a: &Matrix,
    dist: &SamplingDistribution,
    values: &[f64],
    counts: impl IntoIterator<Item = (usize, u64)>,
    s: u64,
    seed: u64,
) -> Result<SketchResult> {
    let cols = a.cols();
    let mut triples = Vec::new();
    let mut distinct = 0;
    for (k, count) in counts {
        distinct += 1;
        let value = values[k];
        if value == 0.0 {
            continue;
        }
        let p = dist.probabilities()[k];
        let c = dist.cells()[k];
        triples.push((c / cols, c % cols, count as f64 * value / (s as f64 * p)));
    }
    Ok(SketchResult {
        sketch: Matrix::sparse(a.rows(), cols, triples)?,
        s,
        seed,
        distribution: dist.descriptor(),
        distinct_entries_hit: distinct,
    })
}

/// Sketch from an explicit sequence of drawn support indices.
///
/// Exposed so fixed draw sequences can be traced by hand; [`sample_sketch`]
/// feeds it random draws.
pub fn sketch_from_draws(a: &Matrix, dist: &SamplingDistribution, draws: &[usize], seed: u64) -> Result<SketchResult> {
    if draws.is_empty() {
        return Err(Error::param("sample count must be at least 1"));
    }
    let values = support_values(a, dist)?;
    let mut counts: HashMap<usize, u64> = HashMap::new();
    for &d in draws {
        if d >= values.len() {
            return Err(Error::Consistency(format!("draw {d} outside support of size {}", values.len())));
        }
        *counts.entry(d).or_default() += 1;
    }
    let mut counts: Vec<(usize, u64)> = counts.into_iter().collect();
    counts.sort_unstable();
    assemble(a, dist, &values, counts, draws.len() as u64, seed)
}

fn draw_chunk(table: &AliasTable, seed: u64, start: u64, len: u64) -> HashMap<usize, u64> {
    let mut rng = rng::seeded(seed);
    rng.set_word_pos(start as u128 * WORDS_PER_TRIAL);
    let mut counts = HashMap::new();
    for _ in 0..len {
        *counts.entry(table.draw(&mut rng)).or_default() += 1;
    }
    debug_assert_eq!(rng.get_word_pos(), (start + len) as u128 * WORDS_PER_TRIAL);
    counts
}

/// Algorithm-1 element sampling: `s` i.i.d. draws from `dist`, each adding
/// A_ij/(s·p_ij) to Ã_ij.
pub fn sample_sketch(a: &Matrix, dist: &SamplingDistribution, s: u64, seed: u64) -> Result<SketchResult> {
    sample_sketch_chunked(a, dist, s, seed, CHUNK)
}

/// [`sample_sketch`] with an explicit chunk size for the parallel split.
pub fn sample_sketch_chunked(
    a: &Matrix,
    dist: &SamplingDistribution,
    s: u64,
    seed: u64,
    chunk: u64,
) -> Result<SketchResult> {
    if s == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    if chunk == 0 {
        return Err(Error::param("chunk size must be at least 1"));
    }
    let values = support_values(a, dist)?;
    let table = AliasTable::new(dist.probabilities());
    let n_chunks = s.div_ceil(chunk);
    let partials: Vec<HashMap<usize, u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            draw_chunk(&table, seed, start, chunk.min(s - start))
        })
        .collect();
    let mut merged: HashMap<usize, u64> = HashMap::new();
    for part in partials {
        for (k, v) in part {
            *merged.entry(k).or_default() += v;
        }
    }
    let mut counts: Vec<(usize, u64)> = merged.into_iter().collect();
    counts.sort_unstable();
    assemble(a, dist, &values, counts, s, seed)
}

/// Draw sequence of [`sample_sketch`] for `seed`, as support indices.
pub fn draw_sequence(dist: &SamplingDistribution, s: u64, seed: u64) -> Vec<usize> {
    let table = AliasTable::new(dist.probabilities());
    let mut rng = rng::seeded(seed);
    (0..s).map(|_| table.draw(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::distribution::{hybrid_probabilities, uniform_probabilities};

    #[test]
    fn single_atom_is_exact() {
        let a = Matrix::dense(1, 1, vec![5.0]).unwrap();
        let d = hybrid_probabilities(&a, 0.3).unwrap();
        for s in [1, 2, 7, 1000] {
            let r = sample_sketch(&a, &d, s, 9).unwrap();
            assert!((r.sketch.get(0, 0) - 5.0).abs() < 1e-12);
            assert_eq!(r.distinct_entries_hit, 1);
        }
    }

    #[test]
    fn hand_traced_double_hit() {
        let a = Matrix::diag(&[3.0, 4.0]).unwrap();
        let d = hybrid_probabilities(&a, 1.0).unwrap();
        // Support order is row-major: index 0 is (0,0).
        let r = sketch_from_draws(&a, &d, &[0, 0], 0).unwrap();
        assert!((r.sketch.get(0, 0) - 7.0).abs() < 1e-12);
        assert_eq!(r.sketch.get(1, 1), 0.0);
        assert_eq!(r.s, 2);
    }

    #[test]
    fn zero_samples_rejected() {
        let a = Matrix::diag(&[3.0, 4.0]).unwrap();
        let d = hybrid_probabilities(&a, 1.0).unwrap();
        assert!(matches!(sample_sketch(&a, &d, 0, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn mismatched_support_rejected() {
        let a = Matrix::diag(&[3.0, 4.0]).unwrap();
        let d = hybrid_probabilities(&a, 1.0).unwrap();
        let other = Matrix::diag(&[3.0, 0.0]).unwrap();
        assert!(matches!(sample_sketch(&other, &d, 3, 1), Err(Error::Consistency(_))));
        let bigger = Matrix::identity(3).unwrap();
        assert!(matches!(sample_sketch(&bigger, &d, 3, 1), Err(Error::Consistency(_))));
    }

    #[test]
    fn nnz_bounded_and_on_support() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0, -2.0], vec![0.5, 3.0, 0.0]]).unwrap();
        let d = hybrid_probabilities(&a, 0.4).unwrap();
        for s in [1, 2, 3, 50] {
            let r = sample_sketch(&a, &d, s, s).unwrap();
            assert!(r.sketch.nnz() as u64 <= s.min(4));
            for e in r.sketch.nonzeros() {
                assert!(a.get(e.row, e.col) != 0.0);
            }
        }
    }

    #[test]
    fn matches_sequential_draws() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        let d = uniform_probabilities(&a);
        let draws = draw_sequence(&d, 1000, 77);
        let seq = sketch_from_draws(&a, &d, &draws, 77).unwrap();
        let par = sample_sketch_chunked(&a, &d, 1000, 77, 37).unwrap();
        assert_eq!(seq.sketch, par.sketch);
    }

    #[test]
    fn chunking_does_not_change_result() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| (0..5).map(|j| ((i * 5 + j) as f64).sin()).collect()).collect();
        let a = Matrix::from_rows(&rows).unwrap();
        let d = hybrid_probabilities(&a, 0.6).unwrap();
        let base = sample_sketch_chunked(&a, &d, 5000, 3, 5000).unwrap();
        for chunk in [1, 7, 128, 4096] {
            let other = sample_sketch_chunked(&a, &d, 5000, 3, chunk).unwrap();
            for (x, y) in base.sketch.to_dense_vec().iter().zip(other.sketch.to_dense_vec()) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }
}
