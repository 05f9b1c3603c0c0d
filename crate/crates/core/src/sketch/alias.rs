//! Walker/Vose alias table for O(1) categorical draws.

use rand::RngCore;

#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// Builds the table from weights that sum to (approximately) one.
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        assert!(n > 0, "alias table needs at least one outcome");
        let total: f64 = weights.iter().sum();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut prob = vec![1.0; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &p) in scaled.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
        }
        Self { prob, alias }
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// One draw consuming exactly two `u64`s from `rng`.
    pub fn draw<R: RngCore>(&self, rng: &mut R) -> usize {
        let column = ((rng.next_u64() as u128 * self.prob.len() as u128) >> 64) as usize;
        let coin = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if coin < self.prob[column] {
            column
        } else {
            self.alias[column]
        }
    }

    /// Probability of each outcome implied by the table.
    pub fn implied_probabilities(&self) -> Vec<f64> {
        let n = self.prob.len() as f64;
        let mut p = vec![0.0; self.prob.len()];
        for (i, (&q, &a)) in self.prob.iter().zip(&self.alias).enumerate() {
            p[i] += q / n;
            p[a] += (1.0 - q) / n;
        }
        p
    }
}
