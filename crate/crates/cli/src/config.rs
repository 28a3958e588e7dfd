//! Run configuration: a flat key=value file with section prefixes
//! (walk.*, train.*, shape.*, eval.*, channel.*), every key overridable
//! by a command-line flag of the same name. Unknown keys are rejected
//! and serialization round-trips losslessly.

use anyhow::{anyhow, bail, Context, Result};
use neb_core::eval::ScoreMode;
use neb_core::graph::EdgeListFormat;
use neb_core::perfmodel::BandwidthProfile;
use neb_core::schedule::ClusterShape;
use neb_core::sgns::TrainConfig;
use neb_core::walker::{SampleOrder, WalkConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph_path: String,
    pub graph_format: String,
    pub graph_symmetrize: bool,
    pub out_dir: String,
    pub seed: u64,
    pub deterministic: bool,

    pub walk_distance: usize,
    pub walk_context: usize,
    pub walk_walks_per_node: usize,
    pub walk_epochs: usize,
    pub walk_order: String,

    pub train_dim: usize,
    pub train_negatives: usize,
    pub train_learning_rate: f64,
    pub train_lr_decay: bool,
    pub train_epochs: usize,
    pub train_episodes_per_epoch: usize,
    pub train_shared_negatives: bool,

    pub shape_num_nodes: usize,
    pub shape_workers_per_node: usize,
    pub shape_subparts: usize,
    pub shape_socket_groups: usize,

    pub eval_test_frac: f64,
    pub eval_valid_frac: f64,
    pub eval_mode: String,
    pub eval_every: usize,
    pub eval_checkpoint: String,

    pub channel_intra_p2p_bps: f64,
    pub channel_cross_socket_bps: f64,
    pub channel_host_staging_bps: f64,
    pub channel_inter_node_bps: f64,
    pub channel_intra_p2p_latency_s: f64,
    pub channel_cross_socket_latency_s: f64,
    pub channel_host_staging_latency_s: f64,
    pub channel_inter_node_latency_s: f64,
    pub channel_cross_socket_penalty: f64,

    pub estimate_nodes: u64,
    pub estimate_edges: u64,
    pub estimate_id_bytes: u32,
    pub estimate_real_bytes: u32,
    pub estimate_machine: bool,
    pub compute_gflops: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            graph_path: String::new(),
            graph_format: "text".into(),
            graph_symmetrize: true,
            out_dir: "neb-out".into(),
            seed: 1,
            deterministic: true,
            walk_distance: 5,
            walk_context: 3,
            walk_walks_per_node: 1,
            walk_epochs: 1,
            walk_order: "shuffled".into(),
            train_dim: 128,
            train_negatives: 5,
            train_learning_rate: 0.025,
            train_lr_decay: false,
            train_epochs: 10,
            train_episodes_per_epoch: 1,
            train_shared_negatives: false,
            shape_num_nodes: 1,
            shape_workers_per_node: 1,
            shape_subparts: 4,
            shape_socket_groups: 1,
            eval_test_frac: 0.01,
            eval_valid_frac: 0.0001,
            eval_mode: "vertex-context".into(),
            eval_every: 0,
            eval_checkpoint: String::new(),
            channel_intra_p2p_bps: f64::INFINITY,
            channel_cross_socket_bps: f64::INFINITY,
            channel_host_staging_bps: f64::INFINITY,
            channel_inter_node_bps: f64::INFINITY,
            channel_intra_p2p_latency_s: 0.0,
            channel_cross_socket_latency_s: 0.0,
            channel_host_staging_latency_s: 0.0,
            channel_inter_node_latency_s: 0.0,
            channel_cross_socket_penalty: 1.3,
            estimate_nodes: 0,
            estimate_edges: 0,
            estimate_id_bytes: 4,
            estimate_real_bytes: 4,
            estimate_machine: false,
            compute_gflops: 20.0,
        }
    }
}

/// Canonical key order; also the serialization order.
pub const KEYS: &[&str] = &[
    "graph.path",
    "graph.format",
    "graph.symmetrize",
    "out.dir",
    "seed",
    "deterministic",
    "walk.distance",
    "walk.context",
    "walk.walks_per_node",
    "walk.epochs",
    "walk.order",
    "train.dim",
    "train.negatives",
    "train.learning_rate",
    "train.lr_decay",
    "train.epochs",
    "train.episodes_per_epoch",
    "train.shared_negatives",
    "shape.num_nodes",
    "shape.workers_per_node",
    "shape.subparts",
    "shape.socket_groups",
    "eval.test_frac",
    "eval.valid_frac",
    "eval.mode",
    "eval.every",
    "eval.checkpoint",
    "channel.intra_p2p_bps",
    "channel.cross_socket_bps",
    "channel.host_staging_bps",
    "channel.inter_node_bps",
    "channel.intra_p2p_latency_s",
    "channel.cross_socket_latency_s",
    "channel.host_staging_latency_s",
    "channel.inter_node_latency_s",
    "channel.cross_socket_penalty",
    "estimate.nodes",
    "estimate.edges",
    "estimate.id_bytes",
    "estimate.real_bytes",
    "estimate.machine",
    "compute.gflops",
];

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        other => bail!("key {key}: expected true or false, got {other:?}"),
    }
}

macro_rules! parse_num {
    ($key:expr, $v:expr) => {
        $v.parse()
            .map_err(|_| anyhow!("key {}: invalid number {:?}", $key, $v))
    };
}

impl RunConfig {
    pub fn get(&self, key: &str) -> Option<String> {
        let v = match key {
            "graph.path" => self.graph_path.clone(),
            "graph.format" => self.graph_format.clone(),
            "graph.symmetrize" => self.graph_symmetrize.to_string(),
            "out.dir" => self.out_dir.clone(),
            "seed" => self.seed.to_string(),
            "deterministic" => self.deterministic.to_string(),
            "walk.distance" => self.walk_distance.to_string(),
            "walk.context" => self.walk_context.to_string(),
            "walk.walks_per_node" => self.walk_walks_per_node.to_string(),
            "walk.epochs" => self.walk_epochs.to_string(),
            "walk.order" => self.walk_order.clone(),
            "train.dim" => self.train_dim.to_string(),
            "train.negatives" => self.train_negatives.to_string(),
            "train.learning_rate" => self.train_learning_rate.to_string(),
            "train.lr_decay" => self.train_lr_decay.to_string(),
            "train.epochs" => self.train_epochs.to_string(),
            "train.episodes_per_epoch" => self.train_episodes_per_epoch.to_string(),
            "train.shared_negatives" => self.train_shared_negatives.to_string(),
            "shape.num_nodes" => self.shape_num_nodes.to_string(),
            "shape.workers_per_node" => self.shape_workers_per_node.to_string(),
            "shape.subparts" => self.shape_subparts.to_string(),
            "shape.socket_groups" => self.shape_socket_groups.to_string(),
            "eval.test_frac" => self.eval_test_frac.to_string(),
            "eval.valid_frac" => self.eval_valid_frac.to_string(),
            "eval.mode" => self.eval_mode.clone(),
            "eval.every" => self.eval_every.to_string(),
            "eval.checkpoint" => self.eval_checkpoint.clone(),
            "channel.intra_p2p_bps" => self.channel_intra_p2p_bps.to_string(),
            "channel.cross_socket_bps" => self.channel_cross_socket_bps.to_string(),
            "channel.host_staging_bps" => self.channel_host_staging_bps.to_string(),
            "channel.inter_node_bps" => self.channel_inter_node_bps.to_string(),
            "channel.intra_p2p_latency_s" => self.channel_intra_p2p_latency_s.to_string(),
            "channel.cross_socket_latency_s" => self.channel_cross_socket_latency_s.to_string(),
            "channel.host_staging_latency_s" => self.channel_host_staging_latency_s.to_string(),
            "channel.inter_node_latency_s" => self.channel_inter_node_latency_s.to_string(),
            "channel.cross_socket_penalty" => self.channel_cross_socket_penalty.to_string(),
            "estimate.nodes" => self.estimate_nodes.to_string(),
            "estimate.edges" => self.estimate_edges.to_string(),
            "estimate.id_bytes" => self.estimate_id_bytes.to_string(),
            "estimate.real_bytes" => self.estimate_real_bytes.to_string(),
            "estimate.machine" => self.estimate_machine.to_string(),
            "compute.gflops" => self.compute_gflops.to_string(),
            _ => return None,
        };
        Some(v)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "graph.path" => self.graph_path = value.into(),
            "graph.format" => {
                if value != "text" && value != "binary" {
                    bail!("key graph.format: expected text or binary, got {value:?}");
                }
                self.graph_format = value.into();
            }
            "graph.symmetrize" => self.graph_symmetrize = parse_bool(key, value)?,
            "out.dir" => self.out_dir = value.into(),
            "seed" => self.seed = parse_num!(key, value)?,
            "deterministic" => self.deterministic = parse_bool(key, value)?,
            "walk.distance" => self.walk_distance = parse_num!(key, value)?,
            "walk.context" => self.walk_context = parse_num!(key, value)?,
            "walk.walks_per_node" => self.walk_walks_per_node = parse_num!(key, value)?,
            "walk.epochs" => self.walk_epochs = parse_num!(key, value)?,
            "walk.order" => {
                SampleOrder::parse(value).map_err(|e| anyhow!("key walk.order: {e}"))?;
                self.walk_order = value.into();
            }
            "train.dim" => self.train_dim = parse_num!(key, value)?,
            "train.negatives" => self.train_negatives = parse_num!(key, value)?,
            "train.learning_rate" => self.train_learning_rate = parse_num!(key, value)?,
            "train.lr_decay" => self.train_lr_decay = parse_bool(key, value)?,
            "train.epochs" => self.train_epochs = parse_num!(key, value)?,
            "train.episodes_per_epoch" => self.train_episodes_per_epoch = parse_num!(key, value)?,
            "train.shared_negatives" => self.train_shared_negatives = parse_bool(key, value)?,
            "shape.num_nodes" => self.shape_num_nodes = parse_num!(key, value)?,
            "shape.workers_per_node" => self.shape_workers_per_node = parse_num!(key, value)?,
            "shape.subparts" => self.shape_subparts = parse_num!(key, value)?,
            "shape.socket_groups" => self.shape_socket_groups = parse_num!(key, value)?,
            "eval.test_frac" => self.eval_test_frac = parse_num!(key, value)?,
            "eval.valid_frac" => self.eval_valid_frac = parse_num!(key, value)?,
            "eval.mode" => {
                ScoreMode::parse(value).map_err(|e| anyhow!("key eval.mode: {e}"))?;
                self.eval_mode = value.into();
            }
            "eval.every" => self.eval_every = parse_num!(key, value)?,
            "eval.checkpoint" => self.eval_checkpoint = value.into(),
            "channel.intra_p2p_bps" => self.channel_intra_p2p_bps = parse_num!(key, value)?,
            "channel.cross_socket_bps" => self.channel_cross_socket_bps = parse_num!(key, value)?,
            "channel.host_staging_bps" => self.channel_host_staging_bps = parse_num!(key, value)?,
            "channel.inter_node_bps" => self.channel_inter_node_bps = parse_num!(key, value)?,
            "channel.intra_p2p_latency_s" => {
                self.channel_intra_p2p_latency_s = parse_num!(key, value)?
            }
            "channel.cross_socket_latency_s" => {
                self.channel_cross_socket_latency_s = parse_num!(key, value)?
            }
            "channel.host_staging_latency_s" => {
                self.channel_host_staging_latency_s = parse_num!(key, value)?
            }
            "channel.inter_node_latency_s" => {
                self.channel_inter_node_latency_s = parse_num!(key, value)?
            }
            "channel.cross_socket_penalty" => {
                self.channel_cross_socket_penalty = parse_num!(key, value)?
            }
            "estimate.nodes" => self.estimate_nodes = parse_num!(key, value)?,
            "estimate.edges" => self.estimate_edges = parse_num!(key, value)?,
            "estimate.id_bytes" => self.estimate_id_bytes = parse_num!(key, value)?,
            "estimate.real_bytes" => self.estimate_real_bytes = parse_num!(key, value)?,
            "estimate.machine" => self.estimate_machine = parse_bool(key, value)?,
            "compute.gflops" => self.compute_gflops = parse_num!(key, value)?,
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# node embedding run configuration\n");
        for key in KEYS {
            out.push_str(&format!("{key}={}\n", self.get(key).unwrap()));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, got {line:?}", lineno + 1))?;
            cfg.set(key.trim(), value.trim())
                .with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &str) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading config {path}"))?;
        RunConfig::parse_text(&text).with_context(|| format!("parsing config {path}"))
    }

    pub fn validate(&self) -> Result<()> {
        self.walk_config().validate().map_err(|e| anyhow!("{e}"))?;
        self.train_config().validate().map_err(|e| anyhow!("{e}"))?;
        if self.walk_epochs < 1 {
            bail!("walk.epochs must be >= 1");
        }
        if self.shape_num_nodes < 1 || self.shape_workers_per_node < 1 || self.shape_subparts < 1 {
            bail!("shape values must all be >= 1");
        }
        if self.shape_socket_groups < 1 || self.shape_socket_groups > self.shape_workers_per_node {
            bail!("shape.socket_groups must lie in 1..=shape.workers_per_node");
        }
        if !(0.0..1.0).contains(&self.eval_test_frac)
            || !(0.0..1.0).contains(&self.eval_valid_frac)
            || self.eval_test_frac + self.eval_valid_frac >= 1.0
        {
            bail!("eval fractions must lie in [0,1) and sum below 1");
        }
        ScoreMode::parse(&self.eval_mode).map_err(|e| anyhow!("{e}"))?;
        SampleOrder::parse(&self.walk_order).map_err(|e| anyhow!("{e}"))?;
        Ok(())
    }

    pub fn edge_format(&self) -> EdgeListFormat {
        match self.graph_format.as_str() {
            "binary" => EdgeListFormat::Binary,
            _ => EdgeListFormat::Text,
        }
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            walk_distance: self.walk_distance,
            context_length: self.walk_context,
            walks_per_node: self.walk_walks_per_node,
            seed: self.seed,
            episodes_per_epoch: self.train_episodes_per_epoch,
            order: SampleOrder::parse(&self.walk_order).unwrap_or(SampleOrder::Shuffled),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.train_dim,
            negatives: self.train_negatives,
            learning_rate: self.train_learning_rate,
            lr_decay: self.train_lr_decay,
            epochs: self.train_epochs,
            seed: self.seed,
            deterministic: self.deterministic,
            shared_negatives: self.train_shared_negatives,
        }
    }

    pub fn cluster_shape(&self) -> ClusterShape {
        ClusterShape::new(
            self.shape_num_nodes,
            self.shape_workers_per_node,
            self.shape_subparts,
        )
    }

    pub fn bandwidth_profile(&self) -> BandwidthProfile {
        BandwidthProfile {
            intra_p2p_bps: self.channel_intra_p2p_bps,
            cross_socket_bps: self.channel_cross_socket_bps,
            host_staging_bps: self.channel_host_staging_bps,
            inter_node_bps: self.channel_inter_node_bps,
            intra_p2p_latency_s: self.channel_intra_p2p_latency_s,
            cross_socket_latency_s: self.channel_cross_socket_latency_s,
            host_staging_latency_s: self.channel_host_staging_latency_s,
            inter_node_latency_s: self.channel_inter_node_latency_s,
            cross_socket_penalty: self.channel_cross_socket_penalty,
        }
    }

    pub fn score_mode(&self) -> ScoreMode {
        ScoreMode::parse(&self.eval_mode).unwrap_or(ScoreMode::VertexContext)
    }
}
