//! Skip-gram negative sampling: scoring, the SGD step, and the per-block
//! training loop.
//!
//! A positive sample `(v, u)` trains vertex row `v` against context row
//! `u` with label 1, then against `m` noise draws with label 0. Blocks are
//! trained single-threaded in file order; parallelism across blocks comes
//! from the scheduler handing workers row-disjoint blocks, never from
//! locking here.

use num_traits::Float;
use rand_chacha::ChaCha8Rng;

use crate::embedding::RowSlice;
use crate::noise::NoiseTable;
use crate::{Error, NodeId, Result};

/// Dot products fed to the logistic are clamped to this magnitude so both
/// log terms of the loss stay finite for every representable row.
pub const SCORE_CLAMP: f64 = 30.0;

/// Samples per shared negative set when negative sharing is enabled.
const SHARED_NEGATIVE_BATCH: usize = 32;

#[inline]
pub fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + *x * *y;
    }
    acc
}

#[inline]
fn clamped_sigmoid<F: Float>(x: F) -> F {
    let clamp = F::from(SCORE_CLAMP).unwrap();
    let x = if x > clamp {
        clamp
    } else if x < -clamp {
        -clamp
    } else {
        x
    };
    F::one() / (F::one() + (-x).exp())
}

/// Edge score sigma(v . c), clamped.
pub fn sgns_score<F: Float>(v_row: &[F], c_row: &[F]) -> F {
    clamped_sigmoid(dot(v_row, c_row))
}

/// One SGD step on a (vertex row, context row) pair. Both rows step along
/// the pre-update value of the other (simultaneous gradient). Returns the
/// logistic loss at the pre-update point.
pub fn sgns_update<F: Float>(v_row: &mut [F], c_row: &mut [F], label: bool, eta: F) -> F {
    let score = sgns_score(v_row, c_row);
    let target = if label { F::one() } else { F::zero() };
    let g = score - target;
    let step = eta * g;
    for (v, c) in v_row.iter_mut().zip(c_row.iter_mut()) {
        let (vi, ci) = (*v, *c);
        *v = vi - step * ci;
        *c = ci - step * vi;
    }
    if label {
        -score.ln()
    } else {
        -(F::one() - score).ln()
    }
}

/// Hyperparameters owned by the training engine.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    /// Linear decay of the learning rate to a tenth over the epochs.
    pub lr_decay: bool,
    pub epochs: usize,
    pub seed: u64,
    /// Deterministic mode pins block order so parallel runs replay
    /// bitwise; performance mode may relax ordering within a step.
    pub deterministic: bool,
    /// Share one negative draw across a small batch of samples instead of
    /// drawing per sample.
    pub shared_negatives: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            negatives: 5,
            learning_rate: 0.025,
            lr_decay: false,
            epochs: 1,
            seed: 1,
            deterministic: true,
            shared_negatives: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::InvalidConfig("dim must be >= 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        Ok(())
    }

    /// Learning rate for an epoch, linearly decayed to eta/10 at the last
    /// epoch when decay is on.
    pub fn eta_for_epoch(&self, epoch: usize) -> f64 {
        if !self.lr_decay || self.epochs <= 1 {
            return self.learning_rate;
        }
        let frac = epoch.min(self.epochs - 1) as f64 / (self.epochs - 1) as f64;
        self.learning_rate * (1.0 - 0.9 * frac)
    }
}

/// RNG stream for one sample block. Both the threaded runtime and the
/// sequential replay derive negatives from this, which is what makes them
/// bitwise comparable.
pub fn block_rng(seed: u64, epoch: u64, episode: u64, src_block: u64, dst_block: u64) -> ChaCha8Rng {
    crate::stream_rng(seed, &[0x5447_4e53, epoch, episode, src_block, dst_block])
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BlockStats {
    pub samples: u64,
    pub loss_sum: f64,
}

impl BlockStats {
    pub fn mean_loss(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.loss_sum / self.samples as f64
        }
    }

    pub fn merge(&mut self, other: &BlockStats) {
        self.samples += other.samples;
        self.loss_sum += other.loss_sum;
    }
}

/// Train one sample block: for each `(src, dst)` in order, one positive
/// update then `negatives` noise updates against the local context
/// partition. Rows outside the declared slices are a schedule violation,
/// the 2D partitioning guarantee being checked at the door.
pub fn train_block<F: Float>(
    samples: &[(NodeId, NodeId)],
    vertex: &mut RowSlice<'_, F>,
    context: &mut RowSlice<'_, F>,
    noise: &NoiseTable,
    cfg: &TrainConfig,
    eta: F,
    rng: &mut ChaCha8Rng,
) -> Result<BlockStats> {
    let mut stats = BlockStats::default();
    let mut shared: Vec<NodeId> = Vec::new();
    for (idx, &(src, dst)) in samples.iter().enumerate() {
        let (src, dst) = (src as usize, dst as usize);
        if !vertex.contains(src) {
            return Err(Error::ScheduleViolation(format!(
                "sample source {src} outside vertex rows {:?}",
                vertex.range()
            )));
        }
        if !context.contains(dst) {
            return Err(Error::ScheduleViolation(format!(
                "sample destination {dst} outside context rows {:?}",
                context.range()
            )));
        }
        let mut loss = sgns_update(vertex.row_mut(src), context.row_mut(dst), true, eta);
        if cfg.shared_negatives {
            if idx % SHARED_NEGATIVE_BATCH == 0 {
                shared = crate::noise::negative_sample(noise, rng, cfg.negatives);
            }
            for &neg in &shared {
                loss = loss
                    + sgns_update(vertex.row_mut(src), context.row_mut(neg as usize), false, eta);
            }
        } else {
            for _ in 0..cfg.negatives {
                let neg = noise.sample(rng) as usize;
                debug_assert!(context.contains(neg));
                loss = loss + sgns_update(vertex.row_mut(src), context.row_mut(neg), false, eta);
            }
        }
        stats.samples += 1;
        stats.loss_sum += loss.to_f64().unwrap();
    }
    Ok(stats)
}
