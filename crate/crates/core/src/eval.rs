//! Link-prediction evaluation: edge splitting, negative pair generation,
//! scoring, and rank-based AUC.

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::embedding::Embeddings;
use crate::graph::Graph;
use crate::sgns::sgns_score;
use crate::{Error, NodeId, Result};

const SPLIT_STREAM: u64 = 0x5350_4c54;
const NEG_STREAM: u64 = 0x4e45_4753;

/// Which matrices score a pair (u, v).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    /// vertex row u against context row v, the trained objective.
    VertexContext,
    /// vertex rows on both sides, for consumers that discard the
    /// context matrix.
    VertexVertex,
}

impl ScoreMode {
    pub fn label(&self) -> &'static str {
        match self {
            ScoreMode::VertexContext => "vertex-context",
            ScoreMode::VertexVertex => "vertex-vertex",
        }
    }

    pub fn parse(s: &str) -> Result<ScoreMode> {
        match s {
            "vertex-context" => Ok(ScoreMode::VertexContext),
            "vertex-vertex" => Ok(ScoreMode::VertexVertex),
            other => Err(Error::InvalidConfig(format!("unknown score mode {other:?}"))),
        }
    }
}

/// Edge split plus matched negative pairs. Negatives are sampled against
/// the full graph, so a held-out positive can never appear as a
/// negative.
#[derive(Debug, Clone)]
pub struct EvalSplit {
    pub node_count: usize,
    pub train_edges: Vec<(NodeId, NodeId)>,
    pub test_edges: Vec<(NodeId, NodeId)>,
    pub valid_edges: Vec<(NodeId, NodeId)>,
    pub test_negatives: Vec<(NodeId, NodeId)>,
    pub valid_negatives: Vec<(NodeId, NodeId)>,
}

impl EvalSplit {
    /// Graph over the training edges only; walks must never see held-out
    /// edges.
    pub fn train_graph(&self, symmetrize: bool) -> Graph {
        Graph::from_edges(self.node_count, &self.train_edges, symmetrize)
    }
}

/// Uniform random edge split. Held-out counts are `round(frac * |E|)`;
/// a nonzero fraction that rounds to zero edges is an error rather than
/// a silent no-op.
pub fn split_edges(g: &Graph, test_frac: f64, valid_frac: f64, seed: u64) -> Result<EvalSplit> {
    if !(0.0..1.0).contains(&test_frac)
        || !(0.0..1.0).contains(&valid_frac)
        || test_frac + valid_frac >= 1.0
    {
        return Err(Error::InvalidArgument(
            "split fractions must lie in [0,1) and sum below 1".into(),
        ));
    }
    let m = g.edge_count();
    let n_test = (test_frac * m as f64).round() as usize;
    let n_valid = (valid_frac * m as f64).round() as usize;
    if test_frac > 0.0 && n_test == 0 {
        return Err(Error::EmptySplit(format!(
            "test fraction {test_frac} of {m} edges rounds to zero"
        )));
    }
    if valid_frac > 0.0 && n_valid == 0 {
        return Err(Error::EmptySplit(format!(
            "validation fraction {valid_frac} of {m} edges rounds to zero"
        )));
    }
    let mut edges: Vec<(NodeId, NodeId)> = g.edges().collect();
    let mut rng = crate::stream_rng(seed, &[SPLIT_STREAM]);
    edges.shuffle(&mut rng);
    let test_edges = edges[..n_test].to_vec();
    let valid_edges = edges[n_test..n_test + n_valid].to_vec();
    let train_edges = edges[n_test + n_valid..].to_vec();
    let test_negatives = gen_negative_pairs(g, n_test, seed ^ 1)?;
    let valid_negatives = gen_negative_pairs(g, n_valid, seed ^ 2)?;
    Ok(EvalSplit {
        node_count: g.node_count(),
        train_edges,
        test_edges,
        valid_edges,
        test_negatives,
        valid_negatives,
    })
}

/// `n` uniform random ordered pairs (u, v), u != v, with no edge u->v in
/// `g`, by rejection sampling. Gives up after `1000 * n` consecutive
/// rejections, which only a near-complete graph can trigger.
pub fn gen_negative_pairs(g: &Graph, n: usize, seed: u64) -> Result<Vec<(NodeId, NodeId)>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let nodes = g.node_count() as u32;
    if nodes < 2 {
        return Err(Error::TooDense(
            "need at least two nodes for non-edge pairs".into(),
        ));
    }
    let mut rng = crate::stream_rng(seed, &[NEG_STREAM]);
    let mut out = Vec::with_capacity(n);
    let limit = 1000u64 * n as u64;
    let mut consecutive_rejections = 0u64;
    while out.len() < n {
        let u = rng.gen_range(0..nodes);
        let v = rng.gen_range(0..nodes);
        if u != v && !g.has_edge(u, v) {
            out.push((u, v));
            consecutive_rejections = 0;
        } else {
            consecutive_rejections += 1;
            if consecutive_rejections >= limit {
                return Err(Error::TooDense(format!(
                    "{limit} consecutive rejections sampling non-edges"
                )));
            }
        }
    }
    Ok(out)
}

/// Score pairs under the chosen matrix pairing.
pub fn score_pairs<F: Float>(
    pairs: &[(NodeId, NodeId)],
    vertex: &Embeddings<F>,
    context: &Embeddings<F>,
    mode: ScoreMode,
) -> Result<Vec<F>> {
    let rows = vertex.rows();
    let mut out = Vec::with_capacity(pairs.len());
    for &(u, v) in pairs {
        if u as usize >= rows || v as usize >= rows {
            return Err(Error::NodeOutOfRange {
                id: u.max(v) as u64,
                node_count: rows as u64,
            });
        }
        let score = match mode {
            ScoreMode::VertexContext => sgns_score(vertex.row(u as usize), context.row(v as usize)),
            ScoreMode::VertexVertex => sgns_score(vertex.row(u as usize), vertex.row(v as usize)),
        };
        out.push(score);
    }
    Ok(out)
}

/// Rank-based AUC with half credit for ties, computed by sorting:
/// `[#(pos > neg) + #(pos == neg)/2] / (|pos| * |neg|)`.
pub fn auc<F: Float>(pos_scores: &[F], neg_scores: &[F]) -> Result<f64> {
    if pos_scores.is_empty() || neg_scores.is_empty() {
        return Err(Error::InvalidArgument(
            "AUC needs non-empty positive and negative score lists".into(),
        ));
    }
    let mut all: Vec<(f64, bool)> = pos_scores
        .iter()
        .map(|s| (s.to_f64().unwrap(), true))
        .chain(neg_scores.iter().map(|s| (s.to_f64().unwrap(), false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // average rank over each tie group, summed for positives
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1..=j
        for item in &all[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let np = pos_scores.len() as f64;
    let nn = neg_scores.len() as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}
