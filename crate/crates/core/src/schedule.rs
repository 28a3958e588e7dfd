//! Hierarchical episode scheduling.
//!
//! Context embedding partitions are pinned one per worker for the whole
//! run. Vertex embeddings are split three levels deep (node group, then
//! worker, then `k` sub-parts per worker) and rotate: within a macro-round
//! sub-parts move along each node's internal worker ring, and at
//! macro-round boundaries each worker hands its current sub-parts to the
//! same worker slot on the next node of the inter-node ring. Over the full
//! plan every (sub-part, context partition) pair is trained exactly once,
//! and within any step the sub-parts on different workers are distinct, so
//! concurrent blocks never share embedding rows.
//!
//! For a worker `g` of node `i` at macro-round `r`, rotation `rho`, the
//! resident sub-part set is the one homed at node `(i - r) mod N`, worker
//! `(g - rho + r) mod G`. The `+ r` term is what makes the macro-round
//! hand-off slot-preserving: after `G` rotations a set sits one ring
//! position past where it started, and the next round's indexing absorbs
//! that offset.

use crate::graph::PartitionMap;
use crate::{Error, Result};

/// Worker topology: `num_nodes` simulated nodes, `workers_per_node`
/// workers each, vertex rows split into `subparts_per_worker` transfer
/// units per worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterShape {
    pub num_nodes: usize,
    pub workers_per_node: usize,
    pub subparts_per_worker: usize,
}

impl ClusterShape {
    pub fn new(num_nodes: usize, workers_per_node: usize, subparts_per_worker: usize) -> Self {
        assert!(num_nodes >= 1 && workers_per_node >= 1 && subparts_per_worker >= 1);
        ClusterShape {
            num_nodes,
            workers_per_node,
            subparts_per_worker,
        }
    }

    pub fn workers(&self) -> usize {
        self.num_nodes * self.workers_per_node
    }

    pub fn subparts(&self) -> usize {
        self.workers() * self.subparts_per_worker
    }

    pub fn steps(&self) -> usize {
        self.subparts()
    }

    pub fn node_of(&self, worker: usize) -> usize {
        worker / self.workers_per_node
    }

    pub fn local_of(&self, worker: usize) -> usize {
        worker % self.workers_per_node
    }

    pub fn worker_id(&self, node: usize, local: usize) -> usize {
        node * self.workers_per_node + local
    }
}

/// The 2D sample-block grid: sources cut at sub-part granularity
/// (`N*G*k` ranges), destinations at context-partition granularity
/// (`N*G` ranges). Source ranges refine destination ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    src: PartitionMap,
    dst: PartitionMap,
}

fn split_even(lo: u32, hi: u32, parts: usize, out: &mut Vec<u32>) {
    let len = (hi - lo) as usize;
    let base = len / parts;
    let rem = len % parts;
    let mut at = lo;
    for i in 0..parts {
        at += (base + usize::from(i < rem)) as u32;
        out.push(at);
    }
}

impl BlockGrid {
    pub fn new(shape: ClusterShape, node_count: usize) -> BlockGrid {
        let n = node_count as u32;
        let mut node_bounds = vec![0u32];
        split_even(0, n, shape.num_nodes, &mut node_bounds);
        let mut worker_bounds = vec![0u32];
        for w in node_bounds.windows(2) {
            split_even(w[0], w[1], shape.workers_per_node, &mut worker_bounds);
        }
        let mut subpart_bounds = vec![0u32];
        for w in worker_bounds.windows(2) {
            split_even(w[0], w[1], shape.subparts_per_worker, &mut subpart_bounds);
        }
        BlockGrid {
            src: PartitionMap::from_boundaries(subpart_bounds),
            dst: PartitionMap::from_boundaries(worker_bounds),
        }
    }

    pub fn src_parts(&self) -> usize {
        self.src.num_partitions()
    }

    pub fn dst_parts(&self) -> usize {
        self.dst.num_partitions()
    }

    pub fn node_count(&self) -> usize {
        self.src.node_count()
    }

    /// Block of an edge sample: (source sub-part index, destination
    /// context partition index).
    pub fn block_of(&self, src: crate::NodeId, dst: crate::NodeId) -> Result<(usize, usize)> {
        Ok((self.src.partition_of(src)?, self.dst.partition_of(dst)?))
    }

    pub fn subpart_rows(&self, subpart: usize) -> std::ops::Range<usize> {
        self.src.range(subpart)
    }

    pub fn context_rows(&self, part: usize) -> std::ops::Range<usize> {
        self.dst.range(part)
    }

    pub fn src_map(&self) -> &PartitionMap {
        &self.src
    }

    pub fn dst_map(&self) -> &PartitionMap {
        &self.dst
    }

    pub fn fingerprint(&self) -> u64 {
        self.src
            .fingerprint()
            .rotate_left(17)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            ^ self.dst.fingerprint()
    }
}

/// Ring orderings: one internal ring per node plus the ring of nodes.
/// `socket_groups > 1` models a multi-socket node; intra-ring hops that
/// cross a socket boundary are routed through host staging.
#[derive(Debug, Clone)]
pub struct RingTopology {
    shape: ClusterShape,
    socket_groups: usize,
}

impl RingTopology {
    pub fn new(shape: ClusterShape) -> RingTopology {
        RingTopology {
            shape,
            socket_groups: 1,
        }
    }

    pub fn with_socket_groups(shape: ClusterShape, socket_groups: usize) -> RingTopology {
        assert!(socket_groups >= 1 && socket_groups <= shape.workers_per_node);
        RingTopology {
            shape,
            socket_groups,
        }
    }

    pub fn shape(&self) -> ClusterShape {
        self.shape
    }

    /// Members of the intra-node ring containing `worker`, in ring order.
    pub fn intra_ring(&self, worker: usize) -> Vec<usize> {
        let node = self.shape.node_of(worker);
        (0..self.shape.workers_per_node)
            .map(|g| self.shape.worker_id(node, g))
            .collect()
    }

    pub fn inter_ring(&self) -> Vec<usize> {
        (0..self.shape.num_nodes).collect()
    }

    /// Predecessor and successor on the worker's intra-node ring.
    pub fn ring_neighbors(&self, worker: usize) -> Result<(usize, usize)> {
        if worker >= self.shape.workers() {
            return Err(Error::InvalidArgument(format!(
                "worker {worker} not in topology of {} workers",
                self.shape.workers()
            )));
        }
        let g = self.shape.workers_per_node;
        let node = self.shape.node_of(worker);
        let local = self.shape.local_of(worker);
        let prev = self.shape.worker_id(node, (local + g - 1) % g);
        let next = self.shape.worker_id(node, (local + 1) % g);
        Ok((prev, next))
    }

    fn socket_of(&self, worker: usize) -> usize {
        let local = self.shape.local_of(worker);
        local * self.socket_groups / self.shape.workers_per_node
    }

    pub fn crosses_socket(&self, a: usize, b: usize) -> bool {
        self.shape.node_of(a) == self.shape.node_of(b) && self.socket_of(a) != self.socket_of(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferKind {
    /// Peer-to-peer hop between intra-node ring neighbors.
    IntraRing,
    /// Macro-round hand-off to the next node on the inter-node ring.
    InterRing,
    /// Intra-node hop that crosses a socket boundary and is staged
    /// through host memory.
    HostStaged,
}

impl TransferKind {
    pub fn label(&self) -> &'static str {
        match self {
            TransferKind::IntraRing => "intra",
            TransferKind::InterRing => "inter",
            TransferKind::HostStaged => "staged",
        }
    }
}

/// One worker's work at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub subpart: usize,
    pub context_part: usize,
    /// Sample block (source sub-part, destination partition).
    pub block: (usize, usize),
}

/// A sub-part movement posted right after the owning worker finishes
/// training it at the given step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transfer {
    pub subpart: usize,
    pub from: usize,
    pub to: usize,
    pub kind: TransferKind,
}

#[derive(Debug, Clone)]
pub struct EpisodePlan {
    shape: ClusterShape,
    /// steps[step][worker]
    steps: Vec<Vec<Assignment>>,
    /// transfers[step], posted after that step's training completes
    transfers: Vec<Vec<Transfer>>,
}

/// Decompose a step index into (macro-round, rotation, slot).
fn decode_step(shape: ClusterShape, step: usize) -> (usize, usize, usize) {
    let k = shape.subparts_per_worker;
    let g = shape.workers_per_node;
    let slot = step % k;
    let rot = (step / k) % g;
    let round = step / (k * g);
    (round, rot, slot)
}

/// Build the episode plan for a cluster shape with a default (single
/// socket group) topology.
pub fn build_schedule(shape: ClusterShape) -> EpisodePlan {
    build_schedule_with_topology(&RingTopology::new(shape))
}

pub fn build_schedule_with_topology(topology: &RingTopology) -> EpisodePlan {
    let shape = topology.shape();
    let (n, g, k) = (
        shape.num_nodes,
        shape.workers_per_node,
        shape.subparts_per_worker,
    );
    let mut steps = Vec::with_capacity(shape.steps());
    let mut transfers = Vec::with_capacity(shape.steps());
    for step in 0..shape.steps() {
        let (round, rot, slot) = decode_step(shape, step);
        let mut row = Vec::with_capacity(shape.workers());
        let mut moved = Vec::new();
        for worker in 0..shape.workers() {
            let node = shape.node_of(worker);
            let local = shape.local_of(worker);
            let home_node = (node + n - round % n) % n;
            let home_worker = (local + g + round % g - rot) % g;
            let subpart = (home_node * g + home_worker) * k + slot;
            row.push(Assignment {
                subpart,
                context_part: worker,
                block: (subpart, worker),
            });
            let last_rotation = rot == g - 1;
            let last_round = round == n - 1;
            if !last_rotation {
                let (_, next) = topology.ring_neighbors(worker).unwrap();
                let kind = if topology.crosses_socket(worker, next) {
                    TransferKind::HostStaged
                } else {
                    TransferKind::IntraRing
                };
                moved.push(Transfer {
                    subpart,
                    from: worker,
                    to: next,
                    kind,
                });
            } else if !last_round {
                let to = shape.worker_id((node + 1) % n, local);
                moved.push(Transfer {
                    subpart,
                    from: worker,
                    to,
                    kind: TransferKind::InterRing,
                });
            }
        }
        steps.push(row);
        transfers.push(moved);
    }
    EpisodePlan {
        shape,
        steps,
        transfers,
    }
}

impl EpisodePlan {
    pub fn shape(&self) -> ClusterShape {
        self.shape
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn assignment(&self, step: usize, worker: usize) -> Assignment {
        self.steps[step][worker]
    }

    pub fn assignments(&self, step: usize) -> &[Assignment] {
        &self.steps[step]
    }

    pub fn transfers_after(&self, step: usize) -> &[Transfer] {
        &self.transfers[step]
    }

    /// Macro-round of a step; the runtime places its barrier where this
    /// changes.
    pub fn macro_round_of(&self, step: usize) -> usize {
        decode_step(self.shape, step).0
    }

    /// Worker initially holding a sub-part (its home worker).
    pub fn initial_owner(&self, subpart: usize) -> usize {
        subpart / self.shape.subparts_per_worker
    }

    /// Worker holding a sub-part when the plan ends.
    pub fn final_owner(&self, subpart: usize) -> usize {
        for step in (0..self.num_steps()).rev() {
            if let Some(a) = self.steps[step].iter().position(|a| a.subpart == subpart) {
                return a;
            }
        }
        unreachable!("every sub-part is trained at least once")
    }

    /// Check the plan invariants: per-step sub-part uniqueness, fixed
    /// context partitions, exactly-once (sub-part x context) coverage,
    /// and ring-adjacent transfers only.
    pub fn validate(&self) -> Result<()> {
        let shape = self.shape;
        let total = shape.subparts();
        let workers = shape.workers();
        if self.steps.len() != shape.steps() {
            return Err(Error::ScheduleViolation("wrong step count".into()));
        }
        let mut seen = vec![false; total * workers];
        let topology = RingTopology::new(shape);
        for (step, row) in self.steps.iter().enumerate() {
            let mut in_step = vec![false; total];
            for (worker, a) in row.iter().enumerate() {
                if a.subpart >= total {
                    return Err(Error::ScheduleViolation(format!(
                        "sub-part {} out of range",
                        a.subpart
                    )));
                }
                if in_step[a.subpart] {
                    return Err(Error::ScheduleViolation(format!(
                        "sub-part {} on two workers at step {step}",
                        a.subpart
                    )));
                }
                in_step[a.subpart] = true;
                if a.context_part != worker {
                    return Err(Error::ScheduleViolation(format!(
                        "context partition moved at step {step} worker {worker}"
                    )));
                }
                if a.block != (a.subpart, worker) {
                    return Err(Error::ScheduleViolation("block/assignment mismatch".into()));
                }
                let pair = a.subpart * workers + worker;
                if seen[pair] {
                    return Err(Error::ScheduleViolation(format!(
                        "pair (sub-part {}, context {}) repeated",
                        a.subpart, worker
                    )));
                }
                seen[pair] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::ScheduleViolation(
                "some (sub-part, context) pair never trained".into(),
            ));
        }
        for moved in &self.transfers {
            for t in moved {
                match t.kind {
                    TransferKind::IntraRing | TransferKind::HostStaged => {
                        let (_, next) = topology.ring_neighbors(t.from)?;
                        if t.to != next {
                            return Err(Error::ScheduleViolation(format!(
                                "intra transfer {} -> {} is not a ring hop",
                                t.from, t.to
                            )));
                        }
                    }
                    TransferKind::InterRing => {
                        let from_node = shape.node_of(t.from);
                        let to_node = shape.node_of(t.to);
                        if to_node != (from_node + 1) % shape.num_nodes
                            || shape.local_of(t.from) != shape.local_of(t.to)
                        {
                            return Err(Error::ScheduleViolation(format!(
                                "inter transfer {} -> {} is not slot-preserving",
                                t.from, t.to
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Structured text dump consumed by tests and the cost model tooling.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str("# step worker subpart context block_i block_j\n");
        for (step, row) in self.steps.iter().enumerate() {
            for (worker, a) in row.iter().enumerate() {
                out.push_str(&format!(
                    "{step} {worker} {} {} {} {}\n",
                    a.subpart, a.context_part, a.block.0, a.block.1
                ));
            }
        }
        out.push_str("# transfer: step subpart from to kind\n");
        for (step, moved) in self.transfers.iter().enumerate() {
            for t in moved {
                out.push_str(&format!(
                    "{step} {} {} {} {}\n",
                    t.subpart,
                    t.from,
                    t.to,
                    t.kind.label()
                ));
            }
        }
        out
    }
}

/// Reference to one worker's sample block at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRef {
    pub worker: usize,
    pub block: (usize, usize),
}

/// Resolve the blocks every worker trains at `step` against a grid.
pub fn blocks_for_step(plan: &EpisodePlan, step: usize, grid: &BlockGrid) -> Result<Vec<BlockRef>> {
    let shape = plan.shape();
    if grid.src_parts() != shape.subparts() || grid.dst_parts() != shape.workers() {
        return Err(Error::InvalidArgument(format!(
            "grid is {}x{} blocks but the shape needs {}x{}",
            grid.src_parts(),
            grid.dst_parts(),
            shape.subparts(),
            shape.workers()
        )));
    }
    if step >= plan.num_steps() {
        return Err(Error::InvalidArgument(format!(
            "step {step} out of range ({} steps)",
            plan.num_steps()
        )));
    }
    Ok(plan
        .assignments(step)
        .iter()
        .map(|a| BlockRef {
            worker: a.context_part,
            block: a.block,
        })
        .collect())
}
