//! Seeded Monte-Carlo checks of the sampler's concentration.

mod common;

use common::*;
use elemsketch::mixing::{optimize_alpha, resolve_sigma_min_sq, SigmaMinMode};
use elemsketch::sketch::{gram_difference_norm, hybrid_probabilities, sample_sketch};
use elemsketch::spectral;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

#[test]
fn test_matrix_has_stable_rank_near_two() {
    let a = stable_rank_two(100, 80, 42);
    let s = spectral::norms(&a, false).unwrap();
    assert!((1.7..2.4).contains(&s.stable_rank), "stable rank {}", s.stable_rank);
}

#[test]
fn gram_deviation_shrinks_with_more_samples() {
    let a = stable_rank_two(100, 80, 42);
    let (sigma_min_sq, _) = resolve_sigma_min_sq(&a, SigmaMinMode::Skip).unwrap();
    let alpha = optimize_alpha(&a, 0.5, 0.01, 1.0, 100, sigma_min_sq).unwrap().alpha_star;
    let dist = hybrid_probabilities(&a, alpha).unwrap();
    let base = (a.rows() + a.cols()) as u64;
    for s in [2 * base, 8 * base] {
        let med = |s: u64| {
            median(
                (0..20)
                    .map(|seed| gram_difference_norm(&a, &sample_sketch(&a, &dist, s, seed).unwrap().sketch).unwrap())
                    .collect(),
            )
        };
        let (lo, hi) = (med(s), med(4 * s));
        assert!(hi < lo, "s = {s}: median at 4s = {hi}, at s = {lo}");
    }
}
