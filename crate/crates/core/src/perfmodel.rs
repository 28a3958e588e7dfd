//! Cost calculators: memory footprint, arithmetic intensity, and a
//! pipeline timeline estimator. Pure functions over exact integer byte
//! arithmetic; sizes report in binary units (GiB = 2^30).

use crate::schedule::ClusterShape;

/// Problem-size inputs for the calculators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostInputs {
    pub node_count: u64,
    pub edge_count: u64,
    /// Samples generated per edge by augmentation (walk distance times
    /// context length).
    pub aug_factor: u64,
    pub dim: u32,
    pub id_bytes: u32,
    pub real_bytes: u32,
    pub negatives: u32,
}

impl CostInputs {
    pub fn samples(&self) -> u64 {
        self.edge_count * self.aug_factor
    }
}

pub const GIB: f64 = 1024.0 * 1024.0 * 1024.0;

/// Exact byte counts for each resident data structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryBreakdown {
    pub nodes_bytes: u64,
    pub edges_bytes: u64,
    pub augmented_bytes: u64,
    pub vertex_emb_bytes: u64,
    pub context_emb_bytes: u64,
}

impl MemoryBreakdown {
    pub fn total_bytes(&self) -> u64 {
        self.nodes_bytes
            + self.edges_bytes
            + self.augmented_bytes
            + self.vertex_emb_bytes
            + self.context_emb_bytes
    }
}

/// Render a byte count with a binary unit, widest unit that keeps the
/// value above one.
pub fn human_bytes(bytes: u64) -> String {
    const UNITS: [(&str, f64); 5] = [
        ("TiB", GIB * 1024.0),
        ("GiB", GIB),
        ("MiB", 1024.0 * 1024.0),
        ("KiB", 1024.0),
        ("B", 1.0),
    ];
    for (name, scale) in UNITS {
        if bytes as f64 >= scale {
            return format!("{:.2} {}", bytes as f64 / scale, name);
        }
    }
    "0 B".to_string()
}

/// Memory cost of the system's data structures: node ids, edge pairs,
/// augmented sample pairs, and the two embedding matrices.
pub fn memory_cost(inputs: &CostInputs) -> MemoryBreakdown {
    let emb = inputs.node_count * inputs.dim as u64 * inputs.real_bytes as u64;
    MemoryBreakdown {
        nodes_bytes: inputs.node_count * inputs.id_bytes as u64,
        edges_bytes: inputs.edge_count * 2 * inputs.id_bytes as u64,
        augmented_bytes: inputs.edge_count * inputs.aug_factor * 2 * inputs.id_bytes as u64,
        vertex_emb_bytes: emb,
        context_emb_bytes: emb,
    }
}

/// Per-sample flops, bytes moved, and their ratio. One sample is a
/// positive pair plus `negatives` noise pairs; each pair costs a fused
/// multiply-add dot product forward and about twice that backward, and
/// reads and writes both touched rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intensity {
    pub flops_per_sample: f64,
    pub bytes_per_sample: f64,
    pub intensity: f64,
}

pub fn arithmetic_intensity(inputs: &CostInputs) -> Intensity {
    let pairs = 1.0 + inputs.negatives as f64;
    let d = inputs.dim as f64;
    let flops = 2.0 * d * pairs * 3.0;
    let bytes = 2.0 * pairs * d * inputs.real_bytes as f64 * 2.0;
    Intensity {
        flops_per_sample: flops,
        bytes_per_sample: bytes,
        intensity: flops / bytes,
    }
}

/// Channel latency/bandwidth profile. Defaults are the in-process
/// simulation's "perfect fabric": zero latency, unbounded bandwidth, and
/// the 1.3x staging penalty for cross-socket hops kept for when a
/// cross-socket channel is actually configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthProfile {
    pub intra_p2p_bps: f64,
    pub cross_socket_bps: f64,
    pub host_staging_bps: f64,
    pub inter_node_bps: f64,
    pub intra_p2p_latency_s: f64,
    pub cross_socket_latency_s: f64,
    pub host_staging_latency_s: f64,
    pub inter_node_latency_s: f64,
    pub cross_socket_penalty: f64,
}

impl Default for BandwidthProfile {
    fn default() -> Self {
        BandwidthProfile {
            intra_p2p_bps: f64::INFINITY,
            cross_socket_bps: f64::INFINITY,
            host_staging_bps: f64::INFINITY,
            inter_node_bps: f64::INFINITY,
            intra_p2p_latency_s: 0.0,
            cross_socket_latency_s: 0.0,
            host_staging_latency_s: 0.0,
            inter_node_latency_s: 0.0,
            cross_socket_penalty: 1.3,
        }
    }
}

/// Predicted episode time under the pipeline's overlap rules plus
/// per-stage totals. Only the per-step sample load (stage 1) and the
/// intra-node peer exchange (stage 4) are serial; stage-out/in and the
/// inter-node hop hide behind training when training is long enough.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimelineEstimate {
    pub episode_seconds: f64,
    pub steps: usize,
    pub sample_load_seconds: f64,
    pub train_seconds: f64,
    pub p2p_per_exchange_seconds: f64,
    pub p2p_serial_seconds: f64,
    pub staging_seconds: f64,
    pub inter_node_seconds: f64,
    pub prefetch_seconds: f64,
}

pub fn timeline_estimate(
    shape: ClusterShape,
    inputs: &CostInputs,
    bw: &BandwidthProfile,
    compute_flops_per_s: f64,
) -> TimelineEstimate {
    let workers = shape.workers() as f64;
    let subparts = shape.subparts() as f64;
    let steps = shape.steps();
    let g = shape.workers_per_node as f64;
    let n_nodes = shape.num_nodes as f64;

    let samples = inputs.samples() as f64;
    let sample_bytes = 2.0 * inputs.id_bytes as f64;
    let block_samples = samples / (subparts * workers);
    let per_sample = arithmetic_intensity(inputs);

    let subpart_bytes =
        inputs.node_count as f64 / subparts * inputs.dim as f64 * inputs.real_bytes as f64;

    // serial per step: sample load, then the ring exchange for the
    // (G-1) of G rotations that move intra-node
    let t1 = bw.host_staging_latency_s + block_samples * sample_bytes / bw.host_staging_bps;
    let t3 = block_samples * per_sample.flops_per_sample / compute_flops_per_s;
    let t4 = bw.intra_p2p_latency_s + subpart_bytes / bw.intra_p2p_bps;
    let t4_per_step = t4 * (g - 1.0) / g;

    // overlapped: host stage-out/in and the inter-node hop, paid once
    // per sub-part per macro-round for all but the last round
    let t_host = bw.host_staging_latency_s + subpart_bytes / bw.host_staging_bps;
    let t6 = bw.inter_node_latency_s + subpart_bytes / bw.inter_node_bps;
    let inter_rounds_frac = (n_nodes - 1.0) / n_nodes;
    let hidden_per_step = (2.0 * t_host + t6) / g * inter_rounds_frac;

    // next-episode prefetch trickles along the whole episode
    let t7_per_step = samples * sample_bytes / bw.host_staging_bps / steps as f64;

    let per_step = t1 + t4_per_step + t3.max(hidden_per_step).max(t7_per_step);
    TimelineEstimate {
        episode_seconds: per_step * steps as f64,
        steps,
        sample_load_seconds: t1 * steps as f64,
        train_seconds: t3 * steps as f64,
        p2p_per_exchange_seconds: t4,
        p2p_serial_seconds: t4_per_step * steps as f64,
        staging_seconds: 2.0 * t_host * subparts * inter_rounds_frac,
        inter_node_seconds: t6 * subparts * inter_rounds_frac,
        prefetch_seconds: t7_per_step * steps as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_inputs() -> CostInputs {
        CostInputs {
            node_count: 1_050_000_000,
            edge_count: 300_000_000_000,
            aug_factor: 10,
            dim: 128,
            id_bytes: 4,
            real_bytes: 4,
            negatives: 5,
        }
    }

    #[test]
    fn vertex_embedding_gigabytes() {
        let m = memory_cost(&table_inputs());
        let gib = m.vertex_emb_bytes as f64 / GIB;
        assert!((gib - 500.7).abs() / 500.7 < 0.005, "vertex {gib} GiB");
        assert_eq!(m.vertex_emb_bytes, m.context_emb_bytes);
    }

    #[test]
    fn node_id_gigabytes() {
        let m = memory_cost(&table_inputs());
        let gib = m.nodes_bytes as f64 / GIB;
        assert!((gib - 3.91).abs() / 3.91 < 0.005, "nodes {gib} GiB");
    }

    #[test]
    fn zero_graph_costs_nothing() {
        let m = memory_cost(&CostInputs {
            node_count: 0,
            edge_count: 0,
            aug_factor: 0,
            dim: 128,
            id_bytes: 4,
            real_bytes: 4,
            negatives: 5,
        });
        assert_eq!(m.total_bytes(), 0);
    }

    #[test]
    fn edge_bytes_are_exact() {
        let m = memory_cost(&table_inputs());
        assert_eq!(m.edges_bytes, 300_000_000_000u64 * 8);
        assert_eq!(m.augmented_bytes, 300_000_000_000u64 * 10 * 8);
    }

    #[test]
    fn intensity_is_independent_of_sample_count() {
        let mut a = table_inputs();
        let mut b = table_inputs();
        a.edge_count = 1_000_000;
        b.edge_count = 1_000_000_000;
        assert_eq!(arithmetic_intensity(&a), arithmetic_intensity(&b));
    }

    #[test]
    fn intensity_is_independent_of_negatives() {
        // flops and bytes both scale with (1 + m), so the ratio is fixed
        let mut a = table_inputs();
        let mut b = table_inputs();
        a.negatives = 0;
        b.negatives = 5;
        let ia = arithmetic_intensity(&a);
        let ib = arithmetic_intensity(&b);
        assert!((ia.intensity - ib.intensity).abs() < 1e-15);
        assert!(ia.flops_per_sample < ib.flops_per_sample);
    }

    #[test]
    fn intensity_value_is_order_one() {
        // d=128, m=5, 4-byte reals: 6d(1+m) flops over 4d(1+m)*4 bytes
        let i = arithmetic_intensity(&table_inputs());
        assert!((i.intensity - 0.375).abs() < 1e-15, "{}", i.intensity);
        assert!(i.intensity > 0.1 && i.intensity < 10.0);
    }

    fn small_inputs() -> CostInputs {
        CostInputs {
            node_count: 1_000_000,
            edge_count: 5_000_000,
            aug_factor: 12,
            dim: 128,
            id_bytes: 4,
            real_bytes: 4,
            negatives: 5,
        }
    }

    #[test]
    fn perfect_fabric_estimate_is_pure_compute() {
        let shape = ClusterShape::new(2, 2, 2);
        let inputs = small_inputs();
        let est = timeline_estimate(shape, &inputs, &BandwidthProfile::default(), 1e9);
        let compute = inputs.samples() as f64 * arithmetic_intensity(&inputs).flops_per_sample
            / 1e9
            / shape.workers() as f64;
        assert!((est.episode_seconds - compute).abs() / compute < 1e-12);
    }

    fn finite_profile() -> BandwidthProfile {
        BandwidthProfile {
            intra_p2p_bps: 10e9,
            cross_socket_bps: 10e9,
            host_staging_bps: 8e9,
            inter_node_bps: 2e9,
            intra_p2p_latency_s: 1e-5,
            cross_socket_latency_s: 1e-5,
            host_staging_latency_s: 1e-5,
            inter_node_latency_s: 1e-4,
            cross_socket_penalty: 1.3,
        }
    }

    #[test]
    fn doubling_subparts_halves_the_exchange() {
        let inputs = small_inputs();
        let bw = finite_profile();
        let e1 = timeline_estimate(ClusterShape::new(2, 2, 2), &inputs, &bw, 1e9);
        let e2 = timeline_estimate(ClusterShape::new(2, 2, 4), &inputs, &bw, 1e9);
        let moved1 = e1.p2p_per_exchange_seconds - bw.intra_p2p_latency_s;
        let moved2 = e2.p2p_per_exchange_seconds - bw.intra_p2p_latency_s;
        assert!((moved1 / moved2 - 2.0).abs() < 1e-9, "{moved1} vs {moved2}");
    }

    #[test]
    fn estimate_dominates_compute_and_serial_comm() {
        use rand::Rng;
        let mut rng = crate::stream_rng(31, &[4]);
        for _ in 0..100 {
            let shape = ClusterShape::new(
                rng.gen_range(1..=3),
                rng.gen_range(1..=4),
                rng.gen_range(1..=4),
            );
            let inputs = small_inputs();
            let bw = BandwidthProfile {
                intra_p2p_bps: rng.gen_range(1e8..1e11),
                host_staging_bps: rng.gen_range(1e8..1e11),
                inter_node_bps: rng.gen_range(1e8..1e11),
                ..finite_profile()
            };
            let rate = rng.gen_range(1e8..1e12);
            let est = timeline_estimate(shape, &inputs, &bw, rate);
            let compute = inputs.samples() as f64
                * arithmetic_intensity(&inputs).flops_per_sample
                / rate
                / shape.workers() as f64;
            let serial = est.sample_load_seconds + est.p2p_serial_seconds;
            assert!(est.episode_seconds + 1e-12 >= compute.max(serial));
        }
    }

    #[test]
    fn estimate_is_monotone_in_bandwidth() {
        let inputs = small_inputs();
        let shape = ClusterShape::new(2, 4, 2);
        let base = finite_profile();
        let t0 = timeline_estimate(shape, &inputs, &base, 1e9).episode_seconds;
        for f in [
            |p: &mut BandwidthProfile| p.intra_p2p_bps /= 4.0,
            |p: &mut BandwidthProfile| p.host_staging_bps /= 4.0,
            |p: &mut BandwidthProfile| p.inter_node_bps /= 4.0,
            |p: &mut BandwidthProfile| p.cross_socket_bps /= 4.0,
        ] {
            let mut slower = base;
            f(&mut slower);
            let t = timeline_estimate(shape, &inputs, &slower, 1e9).episode_seconds;
            assert!(t >= t0 - 1e-12);
        }
    }

    #[test]
    fn human_bytes_units() {
        assert_eq!(human_bytes(0), "0 B");
        assert_eq!(human_bytes(512), "512.00 B");
        assert_eq!(human_bytes(537_600_000_000), "500.68 GiB");
    }
}
