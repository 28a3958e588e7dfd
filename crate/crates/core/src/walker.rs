//! The walk engine: random walks, network augmentation, and episode
//! file production.
//!
//! Walks are first-order uniform random walks, `walks_per_node` from
//! every node. Each walk draws from its own RNG stream keyed by
//! (seed, epoch, start node, walk index), so generation parallelism and
//! thread count never change the output. An augmented walk contributes
//! the directed pairs (path[i], path[i+d]) for every window offset
//! 1 <= d <= context_length.
//!
//! The engine runs decoupled from training: it writes one epoch of
//! samples, bucketed round-robin into episodes and within an episode
//! into 2D block files, then publishes a manifest. A trainer may consume
//! a finished epoch while the next one is still being written.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::Graph;
use crate::schedule::BlockGrid;
use crate::store::{self, Manifest};
use crate::{Error, NodeId, Result};

const WALK_STREAM: u64 = 0x574c_4b31;
const SHUFFLE_STREAM: u64 = 0x5348_4631;

/// Ordering applied to the epoch's samples before round-robin episode
/// assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleOrder {
    /// Seeded global shuffle (the default).
    Shuffled,
    /// Walks sorted by descending start-node degree; samples keep walk
    /// order within each walk.
    DegreeGuided,
}

impl SampleOrder {
    pub fn label(&self) -> &'static str {
        match self {
            SampleOrder::Shuffled => "shuffled",
            SampleOrder::DegreeGuided => "degree",
        }
    }

    pub fn parse(s: &str) -> Result<SampleOrder> {
        match s {
            "shuffled" => Ok(SampleOrder::Shuffled),
            "degree" => Ok(SampleOrder::DegreeGuided),
            other => Err(Error::InvalidConfig(format!("unknown sample order {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkConfig {
    /// Steps per walk (paths have up to `walk_distance + 1` nodes).
    pub walk_distance: usize,
    /// Window width for augmentation.
    pub context_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
    pub episodes_per_epoch: usize,
    pub order: SampleOrder,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walk_distance: 5,
            context_length: 3,
            walks_per_node: 1,
            seed: 1,
            episodes_per_epoch: 1,
            order: SampleOrder::Shuffled,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_distance < 1
            || self.context_length < 1
            || self.walks_per_node < 1
            || self.episodes_per_epoch < 1
        {
            return Err(Error::InvalidConfig(
                "walk distance, context length, walks per node and episodes must all be >= 1"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Uniform random walk of at most `k` steps from `start`; stops early at
/// a node without out-neighbors.
pub fn random_walk(g: &Graph, start: NodeId, k: usize, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    debug_assert!((start as usize) < g.node_count());
    let mut path = Vec::with_capacity(k + 1);
    path.push(start);
    let mut here = start;
    for _ in 0..k {
        let nbrs = g.neighbors(here);
        if nbrs.is_empty() {
            break;
        }
        here = nbrs[rng.gen_range(0..nbrs.len())];
        path.push(here);
    }
    path
}

/// Positive pairs within the context window, preserving walk direction.
pub fn augment(path: &[NodeId], l: usize) -> Vec<(NodeId, NodeId)> {
    let mut pairs = Vec::new();
    for i in 0..path.len() {
        for d in 1..=l {
            if i + d >= path.len() {
                break;
            }
            pairs.push((path[i], path[i + d]));
        }
    }
    pairs
}

/// Exact sample count for `num_walks` full-length walks: each walk of
/// `k` steps with window `l` yields `k*l' - l'*(l'-1)/2` pairs,
/// `l' = min(l, k)`. Walks cut short at sinks yield fewer.
pub fn estimate_samples(num_walks: u64, k: u64, l: u64) -> u64 {
    let l = l.min(k);
    num_walks * (k * l - l * (l - 1) / 2)
}

fn walk_rng(seed: u64, epoch: usize, node: NodeId, walk_index: usize) -> ChaCha8Rng {
    crate::stream_rng(
        seed,
        &[WALK_STREAM, epoch as u64, node as u64, walk_index as u64],
    )
}

/// Generate one epoch's samples in canonical order (before episode
/// assignment). Exposed for the enumeration oracles in tests.
pub fn generate_epoch_samples(g: &Graph, cfg: &WalkConfig, epoch: usize) -> Vec<(NodeId, NodeId)> {
    let n = g.node_count();
    let w = cfg.walks_per_node;
    let per_walk: Vec<Vec<(NodeId, NodeId)>> = (0..n * w)
        .into_par_iter()
        .map(|unit| {
            let node = (unit / w) as NodeId;
            let widx = unit % w;
            let mut rng = walk_rng(cfg.seed, epoch, node, widx);
            let path = random_walk(g, node, cfg.walk_distance, &mut rng);
            augment(&path, cfg.context_length)
        })
        .collect();

    match cfg.order {
        SampleOrder::Shuffled => {
            let mut samples: Vec<(NodeId, NodeId)> = per_walk.into_iter().flatten().collect();
            let mut rng = crate::stream_rng(cfg.seed, &[SHUFFLE_STREAM, epoch as u64]);
            samples.shuffle(&mut rng);
            samples
        }
        SampleOrder::DegreeGuided => {
            let mut order: Vec<usize> = (0..n * w).collect();
            order.sort_by_key(|&unit| {
                let node = (unit / w) as NodeId;
                (std::cmp::Reverse(g.out_degree(node)), unit)
            });
            let mut samples = Vec::with_capacity(per_walk.iter().map(Vec::len).sum());
            for unit in order {
                samples.extend_from_slice(&per_walk[unit]);
            }
            samples
        }
    }
}

/// Run the walk engine for one epoch: generate, order, split round-robin
/// into episodes, bucket into block files under `grid`, and publish the
/// manifest. Rerunning with the same inputs reproduces the files byte
/// for byte.
pub fn run_walk_engine(
    g: &Graph,
    cfg: &WalkConfig,
    grid: &BlockGrid,
    epoch: usize,
    out_root: &Path,
) -> Result<Manifest> {
    cfg.validate()?;
    if grid.node_count() != g.node_count() {
        return Err(Error::InvalidArgument(format!(
            "grid covers {} nodes but the graph has {}",
            grid.node_count(),
            g.node_count()
        )));
    }
    let samples = generate_epoch_samples(g, cfg, epoch);

    let episodes = cfg.episodes_per_epoch;
    let (si, sj) = (grid.src_parts(), grid.dst_parts());
    let mut buckets: Vec<Vec<(NodeId, NodeId)>> = vec![Vec::new(); episodes * si * sj];
    for (idx, &(src, dst)) in samples.iter().enumerate() {
        let episode = idx % episodes;
        let (i, j) = grid.block_of(src, dst)?;
        buckets[(episode * si + i) * sj + j].push((src, dst));
    }

    let edir = store::epoch_dir(out_root, epoch);
    if edir.exists() {
        std::fs::remove_dir_all(&edir).map_err(|e| Error::io(&edir, e))?;
    }
    let mut counts = vec![0u64; episodes * si * sj];
    for episode in 0..episodes {
        let dir = store::episode_dir(out_root, epoch, episode);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for i in 0..si {
            for j in 0..sj {
                let flat = (episode * si + i) * sj + j;
                let path = dir.join(store::block_file_name(i, j));
                store::write_block_file(&path, &buckets[flat], cfg.seed)?;
                counts[flat] = buckets[flat].len() as u64;
            }
        }
    }
    let manifest = Manifest {
        epoch,
        episodes,
        src_parts: si,
        dst_parts: sj,
        node_count: g.node_count(),
        grid_fingerprint: grid.fingerprint(),
        seed: cfg.seed,
        walk_distance: cfg.walk_distance,
        context_length: cfg.context_length,
        walks_per_node: cfg.walks_per_node,
        order: cfg.order.label().into(),
        counts,
    };
    manifest.write_to(&edir)?;
    Ok(manifest)
}
