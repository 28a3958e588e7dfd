//! Noise distribution for negative sampling: degree^power unigram over a
//! contiguous node-id range, drawn in O(1) via the alias method.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::NodeId;

#[derive(Debug, Clone)]
pub struct NoiseTable {
    first_id: NodeId,
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl NoiseTable {
    /// Alias table over ids `first_id..first_id + weights.len()`. All-zero
    /// weights fall back to uniform.
    pub fn from_weights(first_id: NodeId, weights: &[f64]) -> NoiseTable {
        assert!(!weights.is_empty(), "noise table needs at least one node");
        assert!(weights.iter().all(|w| w.is_finite() && *w >= 0.0));
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        let uniform = vec![1.0; n];
        let (weights, total) = if total > 0.0 {
            (weights, total)
        } else {
            (&uniform[..], n as f64)
        };

        // Vose's method: split scaled weights into under- and over-full
        // bins, pair them off until everything sits at exactly 1.
        let mut prob = vec![0.0f64; n];
        let mut alias = vec![0u32; n];
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        for &i in small.iter().chain(large.iter()) {
            prob[i] = 1.0;
            alias[i] = i as u32;
        }
        NoiseTable { first_id, prob, alias }
    }

    pub fn from_degrees(first_id: NodeId, degrees: &[u32], power: f64) -> NoiseTable {
        let weights: Vec<f64> = degrees.iter().map(|&d| (d as f64).powf(power)).collect();
        NoiseTable::from_weights(first_id, &weights)
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn first_id(&self) -> NodeId {
        self.first_id
    }

    #[inline]
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> NodeId {
        let i = rng.gen_range(0..self.prob.len());
        let u: f64 = rng.gen();
        let idx = if u < self.prob[i] { i as u32 } else { self.alias[i] };
        self.first_id + idx
    }

    /// Exact sampling probability of local index `i` implied by the
    /// finished tables. Tests compare this against the normalized weights.
    pub fn implied_probability(&self, i: usize) -> f64 {
        let n = self.prob.len() as f64;
        let mut p = self.prob[i];
        for (j, &a) in self.alias.iter().enumerate() {
            if a as usize == i && j != i {
                p += 1.0 - self.prob[j];
            }
        }
        p / n
    }
}

/// Noise table with node weight `degree^power` (word2vec's 0.75 by
/// default).
pub fn build_noise_table(degrees: &[u32], power: f64) -> NoiseTable {
    NoiseTable::from_degrees(0, degrees, power)
}

/// `m` independent draws. Duplicates are allowed and true edges are not
/// excluded.
pub fn negative_sample(table: &NoiseTable, rng: &mut ChaCha8Rng, m: usize) -> Vec<NodeId> {
    (0..m).map(|_| table.sample(rng)).collect()
}
