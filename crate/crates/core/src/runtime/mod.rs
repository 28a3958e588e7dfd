//! The embedding training engine: executes an episode plan with one
//! thread per worker, moving vertex sub-parts along the two-level ring
//! while each worker trains against its resident context partition.
//!
//! Data flow per worker and step: acquire the scheduled sub-part (from
//! its own buffers or the ring), load the sample block (stage 1), train
//! it (stage 3), then hand the sub-part onward: a peer hop inside the
//! node (stage 4, serial), or at macro-round boundaries a stage-out /
//! inter-node / stage-in route (stages 2, 6, 5) that is posted
//! asynchronously and overlaps the next slots' training. Sample blocks
//! for the following episode are prefetched on a dedicated IO lane
//! (stage 7) while the current episode trains.
//!
//! In deterministic mode the result is bitwise identical to
//! [`TrainingRun::replay_epoch`], the canonical sequential pass, because
//! every block is trained in a fixed internal order with a block-keyed
//! RNG stream and concurrent blocks never share rows.

pub mod channel;
pub mod timeline;

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::embedding::RowSlice;
use crate::noise::NoiseTable;
use crate::perfmodel::BandwidthProfile;
use crate::schedule::{BlockGrid, EpisodePlan, TransferKind};
use crate::sgns::{block_rng, train_block, BlockStats, TrainConfig};
use crate::store::EpisodeSampleStore;
use crate::{EmbeddingMatrix, Error, NodeId, Result};

pub use channel::{ChannelKind, CommChannel, DeliveryReceipt, Endpoint, SubpartMsg};
pub use timeline::{StageEvent, StageTimeline};

/// Aggregate counters for an episode or epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunStats {
    pub samples: u64,
    pub loss_sum: f64,
}

impl RunStats {
    pub fn mean_loss(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.loss_sum / self.samples as f64
        }
    }

    pub fn merge(&mut self, other: RunStats) {
        self.samples += other.samples;
        self.loss_sum += other.loss_sum;
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub profile: BandwidthProfile,
    /// Socket groups per node; must match the topology the plan was
    /// built with.
    pub socket_groups: usize,
    pub deterministic: bool,
    /// How long a worker waits for a sub-part before declaring the
    /// channel stalled.
    pub recv_timeout: Duration,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            profile: BandwidthProfile::default(),
            socket_groups: 1,
            deterministic: true,
            recv_timeout: Duration::from_secs(60),
        }
    }
}

/// Read-through cache of sample blocks, shared by workers and the
/// prefetch lane.
pub struct BlockCache {
    store: EpisodeSampleStore,
    map: Mutex<HashMap<(usize, usize, usize), std::sync::Arc<Vec<(NodeId, NodeId)>>>>,
}

impl BlockCache {
    pub fn new(store: EpisodeSampleStore) -> BlockCache {
        BlockCache {
            store,
            map: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &EpisodeSampleStore {
        &self.store
    }

    pub fn fetch(
        &self,
        episode: usize,
        src: usize,
        dst: usize,
    ) -> Result<std::sync::Arc<Vec<(NodeId, NodeId)>>> {
        let key = (episode, src, dst);
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let block = std::sync::Arc::new(self.store.read_block(episode, src, dst)?);
        self.map.lock().unwrap().insert(key, block.clone());
        Ok(block)
    }

    /// Pull every block of an episode into memory (the stage-7 path).
    pub fn load_episode(&self, episode: usize) -> Result<()> {
        let m = self.store.manifest();
        for i in 0..m.src_parts {
            for j in 0..m.dst_parts {
                self.fetch(episode, i, j)?;
            }
        }
        Ok(())
    }

    pub fn evict_episode(&self, episode: usize) {
        self.map.lock().unwrap().retain(|k, _| k.0 != episode);
    }
}

/// Barrier for macro-round boundaries that stays responsive to worker
/// aborts (a plain std barrier would deadlock if a peer died).
struct RoundBarrier {
    state: Mutex<(u64, usize)>,
    cv: Condvar,
    parties: usize,
}

impl RoundBarrier {
    fn new(parties: usize) -> RoundBarrier {
        RoundBarrier {
            state: Mutex::new((0, 0)),
            cv: Condvar::new(),
            parties,
        }
    }

    fn wait(&self, abort: &AtomicBool) -> Result<()> {
        let mut st = self.state.lock().unwrap();
        let gen = st.0;
        st.1 += 1;
        if st.1 == self.parties {
            st.1 = 0;
            st.0 += 1;
            self.cv.notify_all();
            return Ok(());
        }
        loop {
            let (guard, _) = self
                .cv
                .wait_timeout(st, Duration::from_millis(50))
                .unwrap();
            st = guard;
            if st.0 != gen {
                return Ok(());
            }
            if abort.load(Ordering::Relaxed) {
                return Err(Error::Channel("aborted at macro-round barrier".into()));
            }
        }
    }
}

struct ChannelSet {
    p2p: CommChannel,
    cross: CommChannel,
    host: CommChannel,
    inter: CommChannel,
}

impl ChannelSet {
    fn new(p: &BandwidthProfile) -> ChannelSet {
        ChannelSet {
            p2p: CommChannel::from_profile(ChannelKind::IntraP2p, p),
            cross: CommChannel::from_profile(ChannelKind::CrossSocketStaged, p),
            host: CommChannel {
                kind: ChannelKind::IntraP2p,
                latency_s: p.host_staging_latency_s,
                bandwidth_bps: p.host_staging_bps,
                penalty: 1.0,
            },
            inter: CommChannel::from_profile(ChannelKind::InterNode, p),
        }
    }
}

/// Per-context-partition noise tables (degree^power over each worker's
/// resident rows). Empty partitions get a placeholder that training can
/// never legally draw from.
pub fn build_partition_noise(degrees: &[u32], grid: &BlockGrid, power: f64) -> Vec<NoiseTable> {
    (0..grid.dst_parts())
        .map(|j| {
            let range = grid.context_rows(j);
            if range.is_empty() {
                NoiseTable::from_weights(range.start as NodeId, &[1.0])
            } else {
                NoiseTable::from_degrees(range.start as NodeId, &degrees[range], power)
            }
        })
        .collect()
}

struct WorkerOutput {
    worker: usize,
    events: Vec<StageEvent>,
    stats: Vec<BlockStats>,
}

struct SharedRun<'a> {
    plan: &'a EpisodePlan,
    grid: &'a BlockGrid,
    noise: &'a [NoiseTable],
    cfg: &'a TrainConfig,
    opts: &'a RunOptions,
    cache: &'a BlockCache,
    channels: ChannelSet,
    epoch: usize,
    episode: usize,
    eta: f32,
    t0: Instant,
    abort: AtomicBool,
    barrier: RoundBarrier,
    out_subparts: Mutex<Vec<Option<Vec<f32>>>>,
    out_contexts: Mutex<Vec<Option<Vec<f32>>>>,
}

impl SharedRun<'_> {
    fn ns(&self, t: Instant) -> u64 {
        t.saturating_duration_since(self.t0).as_nanos() as u64
    }
}

fn sleep_secs(secs: f64) {
    if secs > 0.0 {
        std::thread::sleep(Duration::from_secs_f64(secs));
    }
}

/// Everything a training run shares across episodes: the plan, the block
/// grid it matches, per-partition noise tables, and hyperparameters.
pub struct TrainingRun<'a> {
    plan: &'a EpisodePlan,
    grid: &'a BlockGrid,
    noise: &'a [NoiseTable],
    cfg: &'a TrainConfig,
    opts: RunOptions,
}

impl<'a> TrainingRun<'a> {
    pub fn new(
        plan: &'a EpisodePlan,
        grid: &'a BlockGrid,
        noise: &'a [NoiseTable],
        cfg: &'a TrainConfig,
        opts: RunOptions,
    ) -> Result<TrainingRun<'a>> {
        cfg.validate()?;
        plan.validate()?;
        let shape = plan.shape();
        if grid.src_parts() != shape.subparts() || grid.dst_parts() != shape.workers() {
            return Err(Error::InvalidArgument(format!(
                "grid {}x{} does not match shape needing {}x{}",
                grid.src_parts(),
                grid.dst_parts(),
                shape.subparts(),
                shape.workers()
            )));
        }
        if noise.len() != shape.workers() {
            return Err(Error::InvalidArgument(format!(
                "need one noise table per worker: {} tables, {} workers",
                noise.len(),
                shape.workers()
            )));
        }
        Ok(TrainingRun {
            plan,
            grid,
            noise,
            cfg,
            opts,
        })
    }

    pub fn plan(&self) -> &EpisodePlan {
        self.plan
    }

    fn check_matrices(&self, vertex: &EmbeddingMatrix, context: &EmbeddingMatrix) -> Result<()> {
        let n = self.grid.node_count();
        if vertex.rows() != n || context.rows() != n {
            return Err(Error::InvalidArgument(format!(
                "embeddings have {}/{} rows, grid covers {n} nodes",
                vertex.rows(),
                context.rows()
            )));
        }
        if vertex.dim() != self.cfg.dim || context.dim() != self.cfg.dim {
            return Err(Error::InvalidArgument("embedding dim mismatch".into()));
        }
        Ok(())
    }

    fn check_store(&self, store: &EpisodeSampleStore) -> Result<()> {
        let m = store.manifest();
        if m.grid_fingerprint != self.grid.fingerprint() {
            return Err(Error::Manifest(format!(
                "sample files were cut for grid {:016x}, trainer runs grid {:016x}",
                m.grid_fingerprint,
                self.grid.fingerprint()
            )));
        }
        if m.src_parts != self.grid.src_parts() || m.dst_parts != self.grid.dst_parts() {
            return Err(Error::Manifest("manifest block grid mismatch".into()));
        }
        if m.node_count != self.grid.node_count() {
            return Err(Error::Manifest("manifest node count mismatch".into()));
        }
        Ok(())
    }

    /// Execute one episode with one thread per worker. Returns the
    /// updated statistics and the stage timeline.
    pub fn run_episode(
        &self,
        cache: &BlockCache,
        epoch: usize,
        episode: usize,
        vertex: &mut EmbeddingMatrix,
        context: &mut EmbeddingMatrix,
    ) -> Result<(RunStats, StageTimeline)> {
        self.run_episode_at(Instant::now(), cache, epoch, episode, vertex, context)
    }

    fn run_episode_at(
        &self,
        t0: Instant,
        cache: &BlockCache,
        epoch: usize,
        episode: usize,
        vertex: &mut EmbeddingMatrix,
        context: &mut EmbeddingMatrix,
    ) -> Result<(RunStats, StageTimeline)> {
        self.check_matrices(vertex, context)?;
        self.check_store(cache.store())?;
        let shape = self.plan.shape();
        let workers = shape.workers();
        let k = shape.subparts_per_worker;
        let eta = self.cfg.eta_for_epoch(epoch) as f32;

        let mut endpoints = Endpoint::ring(workers);
        for (w, ep) in endpoints.iter_mut().enumerate() {
            for slot in 0..k {
                let subpart = w * k + slot;
                ep.insert(subpart, vertex.copy_rows(self.grid.subpart_rows(subpart)));
            }
        }
        let ctx_bufs: Vec<Vec<f32>> = (0..workers)
            .map(|w| context.copy_rows(self.grid.context_rows(w)))
            .collect();

        let shared = SharedRun {
            plan: self.plan,
            grid: self.grid,
            noise: self.noise,
            cfg: self.cfg,
            opts: &self.opts,
            cache,
            channels: ChannelSet::new(&self.opts.profile),
            epoch,
            episode,
            eta,
            t0,
            abort: AtomicBool::new(false),
            barrier: RoundBarrier::new(workers),
            out_subparts: Mutex::new(vec![None; shape.subparts()]),
            out_contexts: Mutex::new(vec![None; workers]),
        };

        let results: Vec<Result<WorkerOutput>> = std::thread::scope(|s| {
            let handles: Vec<_> = endpoints
                .into_iter()
                .zip(ctx_bufs)
                .map(|(ep, ctx_buf)| {
                    let shared = &shared;
                    s.spawn(move || {
                        let out = worker_main(shared, ep, ctx_buf);
                        if out.is_err() {
                            shared.abort.store(true, Ordering::Relaxed);
                        }
                        out
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join().unwrap_or_else(|_| {
                        Err(Error::Channel("worker thread panicked".into()))
                    })
                })
                .collect()
        });

        let mut outputs = Vec::with_capacity(workers);
        for r in results {
            outputs.push(r?);
        }
        outputs.sort_by_key(|o| o.worker);

        for (subpart, buf) in shared
            .out_subparts
            .into_inner()
            .unwrap()
            .into_iter()
            .enumerate()
        {
            let buf = buf.ok_or_else(|| {
                Error::Channel(format!("sub-part {subpart} never written back"))
            })?;
            vertex.paste_rows(self.grid.subpart_rows(subpart).start, &buf);
        }
        for (w, buf) in shared
            .out_contexts
            .into_inner()
            .unwrap()
            .into_iter()
            .enumerate()
        {
            let buf =
                buf.ok_or_else(|| Error::Channel(format!("context {w} never written back")))?;
            context.paste_rows(self.grid.context_rows(w).start, &buf);
        }

        // canonical (step-major, worker-minor) aggregation matches the
        // sequential replay bit for bit
        let mut stats = RunStats::default();
        let mut timeline = StageTimeline::default();
        for step in 0..self.plan.num_steps() {
            for out in &outputs {
                let bs = out.stats[step];
                stats.samples += bs.samples;
                stats.loss_sum += bs.loss_sum;
            }
        }
        for out in outputs {
            timeline.events.extend(out.events);
        }
        timeline.sort();
        Ok((stats, timeline))
    }

    /// Run all of an epoch's episodes in order, prefetching each next
    /// episode's blocks while the current one trains.
    pub fn run_epoch(
        &self,
        cache: &BlockCache,
        epoch: usize,
        vertex: &mut EmbeddingMatrix,
        context: &mut EmbeddingMatrix,
    ) -> Result<(RunStats, StageTimeline)> {
        self.check_store(cache.store())?;
        let episodes = cache.store().manifest().episodes;
        let io_lane = self.plan.shape().workers();
        let t0 = Instant::now();
        let mut total = RunStats::default();
        let mut timeline = StageTimeline::default();

        let t = Instant::now();
        cache.load_episode(0)?;
        timeline.push(StageEvent {
            worker: io_lane,
            stage: 7,
            subpart: None,
            start_ns: t.saturating_duration_since(t0).as_nanos() as u64,
            end_ns: Instant::now().saturating_duration_since(t0).as_nanos() as u64,
        });

        for episode in 0..episodes {
            let (stats, tl, prefetch_ev) = std::thread::scope(
                |s| -> Result<(RunStats, StageTimeline, Option<StageEvent>)> {
                    let prefetch = if episode + 1 < episodes {
                        Some(s.spawn(move || -> Result<StageEvent> {
                            let start = Instant::now();
                            cache.load_episode(episode + 1)?;
                            Ok(StageEvent {
                                worker: io_lane,
                                stage: 7,
                                subpart: None,
                                start_ns: start.saturating_duration_since(t0).as_nanos() as u64,
                                end_ns: Instant::now().saturating_duration_since(t0).as_nanos()
                                    as u64,
                            })
                        }))
                    } else {
                        None
                    };
                    let (stats, tl) =
                        self.run_episode_at(t0, cache, epoch, episode, vertex, context)?;
                    let ev = match prefetch {
                        Some(h) => Some(h.join().map_err(|_| {
                            Error::Channel("prefetch thread panicked".into())
                        })??),
                        None => None,
                    };
                    Ok((stats, tl, ev))
                },
            )?;
            total.merge(stats);
            timeline.extend(tl);
            if let Some(ev) = prefetch_ev {
                timeline.push(ev);
            }
            cache.evict_episode(episode);
        }
        timeline.sort();
        Ok((total, timeline))
    }

    /// Canonical sequential pass over the same plan and files: blocks in
    /// step order, workers in id order within a step, training directly
    /// on the master matrices. Deterministic-mode parallel runs must
    /// match this bitwise.
    pub fn replay_epoch(
        &self,
        store: &EpisodeSampleStore,
        epoch: usize,
        vertex: &mut EmbeddingMatrix,
        context: &mut EmbeddingMatrix,
    ) -> Result<RunStats> {
        self.check_matrices(vertex, context)?;
        self.check_store(store)?;
        let eta = self.cfg.eta_for_epoch(epoch) as f32;
        let mut stats = RunStats::default();
        for episode in 0..store.manifest().episodes {
            for step in 0..self.plan.num_steps() {
                for worker in 0..self.plan.shape().workers() {
                    let a = self.plan.assignment(step, worker);
                    let samples = store.read_block(episode, a.block.0, a.block.1)?;
                    let sp_range = self.grid.subpart_rows(a.subpart);
                    let ctx_range = self.grid.context_rows(worker);
                    let mut vs = vertex.slice_rows_mut(sp_range);
                    let mut cs = context.slice_rows_mut(ctx_range);
                    let mut rng = block_rng(
                        self.cfg.seed,
                        epoch as u64,
                        episode as u64,
                        a.block.0 as u64,
                        a.block.1 as u64,
                    );
                    let bs = train_block(
                        &samples,
                        &mut vs,
                        &mut cs,
                        &self.noise[worker],
                        self.cfg,
                        eta,
                        &mut rng,
                    )?;
                    stats.samples += bs.samples;
                    stats.loss_sum += bs.loss_sum;
                }
            }
        }
        Ok(stats)
    }
}

fn worker_main(
    shared: &SharedRun<'_>,
    mut ep: Endpoint,
    mut ctx_buf: Vec<f32>,
) -> Result<WorkerOutput> {
    let w = ep.id;
    let plan = shared.plan;
    let shape = plan.shape();
    let dim = shared.cfg.dim;
    let ctx_first = shared.grid.context_rows(w).start;
    let mut events = Vec::new();
    let mut stats = Vec::with_capacity(plan.num_steps());
    let mut parked: HashMap<usize, SubpartMsg> = HashMap::new();

    // stage-in of the resident context partition and home sub-parts
    let t = Instant::now();
    let mut stage_in = shared.channels.host.transfer_seconds(ctx_buf.len() * 4);
    events.push(StageEvent {
        worker: w,
        stage: 5,
        subpart: None,
        start_ns: shared.ns(t),
        end_ns: shared.ns(t) + (stage_in * 1e9) as u64,
    });
    for subpart in ep.held_ids() {
        let bytes = shared.grid.subpart_rows(subpart).len() * dim * 4;
        let secs = shared.channels.host.transfer_seconds(bytes);
        events.push(StageEvent {
            worker: w,
            stage: 5,
            subpart: Some(subpart),
            start_ns: shared.ns(t) + (stage_in * 1e9) as u64,
            end_ns: shared.ns(t) + ((stage_in + secs) * 1e9) as u64,
        });
        stage_in += secs;
    }
    sleep_secs(stage_in);

    for step in 0..plan.num_steps() {
        if step > 0 && plan.macro_round_of(step) != plan.macro_round_of(step - 1) {
            shared.barrier.wait(&shared.abort)?;
        }
        let a = plan.assignment(step, w);

        let mut buf = match ep.take(a.subpart) {
            Some(buf) => buf,
            None => acquire_subpart(shared, &mut ep, &mut parked, a.subpart, w, &mut events)?,
        };

        let t = Instant::now();
        let samples = shared.cache.fetch(shared.episode, a.block.0, a.block.1)?;
        events.push(StageEvent {
            worker: w,
            stage: 1,
            subpart: Some(a.subpart),
            start_ns: shared.ns(t),
            end_ns: shared.ns(Instant::now()),
        });

        let t = Instant::now();
        let sp_range = shared.grid.subpart_rows(a.subpart);
        let mut vs = RowSlice::new(sp_range.start, dim, &mut buf);
        let mut cs = RowSlice::new(ctx_first, dim, &mut ctx_buf);
        let mut rng = block_rng(
            shared.cfg.seed,
            shared.epoch as u64,
            shared.episode as u64,
            a.block.0 as u64,
            a.block.1 as u64,
        );
        let bs = train_block(
            &samples,
            &mut vs,
            &mut cs,
            &shared.noise[w],
            shared.cfg,
            shared.eta,
            &mut rng,
        )
        .map_err(|e| {
            Error::ScheduleViolation(format!("worker {w} step {step}: {e}"))
        })?;
        events.push(StageEvent {
            worker: w,
            stage: 3,
            subpart: Some(a.subpart),
            start_ns: shared.ns(t),
            end_ns: shared.ns(Instant::now()),
        });
        stats.push(bs);

        match plan.transfers_after(step).iter().find(|t| t.from == w) {
            Some(tr) => {
                debug_assert_eq!(tr.subpart, a.subpart);
                ep.insert(a.subpart, buf);
                send_transfer(shared, &mut ep, tr.to, tr.subpart, tr.kind, &mut events)?;
            }
            None => {
                // end of this sub-part's chain; retain for write-back
                ep.insert(a.subpart, buf);
            }
        }
    }

    // final stage-out of retained sub-parts and the context partition
    {
        let mut out = shared.out_subparts.lock().unwrap();
        for subpart in ep.held_ids() {
            let rows = ep.take(subpart).unwrap();
            let t = Instant::now();
            let secs = shared.channels.host.transfer_seconds(rows.len() * 4);
            events.push(StageEvent {
                worker: w,
                stage: 2,
                subpart: Some(subpart),
                start_ns: shared.ns(t),
                end_ns: shared.ns(t) + (secs * 1e9) as u64,
            });
            sleep_secs(secs);
            if out[subpart].is_some() {
                return Err(Error::Channel(format!(
                    "sub-part {subpart} written back twice"
                )));
            }
            out[subpart] = Some(rows);
        }
    }
    {
        let t = Instant::now();
        let secs = shared.channels.host.transfer_seconds(ctx_buf.len() * 4);
        events.push(StageEvent {
            worker: w,
            stage: 2,
            subpart: None,
            start_ns: shared.ns(t),
            end_ns: shared.ns(t) + (secs * 1e9) as u64,
        });
        sleep_secs(secs);
        shared.out_contexts.lock().unwrap()[w] = Some(ctx_buf);
    }
    let _ = shape;
    Ok(WorkerOutput {
        worker: w,
        events,
        stats,
    })
}

fn acquire_subpart(
    shared: &SharedRun<'_>,
    ep: &mut Endpoint,
    parked: &mut HashMap<usize, SubpartMsg>,
    subpart: usize,
    w: usize,
    events: &mut Vec<StageEvent>,
) -> Result<Vec<f32>> {
    let deadline = Instant::now() + shared.opts.recv_timeout;
    loop {
        if let Some(msg) = parked.remove(&subpart) {
            let wait = msg.deliver_at.saturating_duration_since(Instant::now());
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
            if msg.stage_in_seconds > 0.0 {
                let t = Instant::now();
                events.push(StageEvent {
                    worker: w,
                    stage: 5,
                    subpart: Some(subpart),
                    start_ns: shared.ns(t),
                    end_ns: shared.ns(t) + (msg.stage_in_seconds * 1e9) as u64,
                });
                sleep_secs(msg.stage_in_seconds);
            }
            return Ok(msg.rows);
        }
        if shared.abort.load(Ordering::Relaxed) {
            return Err(Error::Channel(format!("worker {w} aborted")));
        }
        if Instant::now() >= deadline {
            return Err(Error::Channel(format!(
                "worker {w} timed out waiting for sub-part {subpart}"
            )));
        }
        if let Some(msg) = ep.try_next(Duration::from_millis(20))? {
            parked.insert(msg.subpart, msg);
        }
    }
}

fn send_transfer(
    shared: &SharedRun<'_>,
    ep: &mut Endpoint,
    to: usize,
    subpart: usize,
    kind: TransferKind,
    events: &mut Vec<StageEvent>,
) -> Result<()> {
    let w = ep.id;
    match kind {
        TransferKind::IntraRing | TransferKind::HostStaged => {
            // serial peer hop: the worker stalls for the transfer
            let ch = if kind == TransferKind::IntraRing {
                &shared.channels.p2p
            } else {
                &shared.channels.cross
            };
            let t = Instant::now();
            let receipt = ep.send_subpart(to, subpart, ch, 0.0)?;
            events.push(StageEvent {
                worker: w,
                stage: 4,
                subpart: Some(subpart),
                start_ns: shared.ns(t),
                end_ns: shared.ns(t) + (receipt.transfer_seconds * 1e9) as u64,
            });
            sleep_secs(receipt.transfer_seconds);
        }
        TransferKind::InterRing => {
            // asynchronous route: stage-out to the host arena, the
            // inter-node hop, and a stage-in charged at the receiver
            let bytes = shared.grid.subpart_rows(subpart).len() * shared.cfg.dim * 4;
            let d_out = shared.channels.host.transfer_seconds(bytes);
            let d_link = shared.channels.inter.transfer_seconds(bytes);
            let t = Instant::now();
            let start = shared.ns(t);
            events.push(StageEvent {
                worker: w,
                stage: 2,
                subpart: Some(subpart),
                start_ns: start,
                end_ns: start + (d_out * 1e9) as u64,
            });
            events.push(StageEvent {
                worker: w,
                stage: 6,
                subpart: Some(subpart),
                start_ns: start + (d_out * 1e9) as u64,
                end_ns: start + ((d_out + d_link) * 1e9) as u64,
            });
            ep.send_subpart_with_delay(to, subpart, d_out + d_link, d_out)?;
        }
    }
    Ok(())
}
