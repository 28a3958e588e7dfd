//! Seeded synthetic graph generators used by tests, benchmarks, and the
//! quality checks. All generators are deterministic in their seed.

use rand::Rng;

use crate::NodeId;

/// Uniform random directed edges, `edges_per_node * n` in total.
pub fn erdos_renyi(n: usize, edges_per_node: usize, seed: u64) -> Vec<(NodeId, NodeId)> {
    assert!(n > 0);
    let mut rng = crate::stream_rng(seed, &[0x4552]);
    let m = n * edges_per_node;
    (0..m)
        .map(|_| (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32)))
        .collect()
}

/// Preferential attachment: each new node attaches to `m_attach` existing
/// nodes chosen proportionally to degree. Produces the skewed degree
/// distribution typical of social networks.
pub fn barabasi_albert(n: usize, m_attach: usize, seed: u64) -> Vec<(NodeId, NodeId)> {
    assert!(n > m_attach && m_attach >= 1);
    let mut rng = crate::stream_rng(seed, &[0x4241]);
    let mut edges = Vec::with_capacity(n * m_attach);
    // endpoint pool: picking uniformly from it is degree-proportional
    let mut pool: Vec<NodeId> = Vec::with_capacity(2 * n * m_attach);
    for v in 0..=m_attach {
        for u in 0..v {
            edges.push((u as NodeId, v as NodeId));
            pool.push(u as NodeId);
            pool.push(v as NodeId);
        }
    }
    for v in (m_attach + 1)..n {
        let mut chosen = Vec::with_capacity(m_attach);
        while chosen.len() < m_attach {
            let u = pool[rng.gen_range(0..pool.len())];
            if u != v as NodeId && !chosen.contains(&u) {
                chosen.push(u);
            }
        }
        for u in chosen {
            edges.push((u, v as NodeId));
            pool.push(u);
            pool.push(v as NodeId);
        }
    }
    edges
}

/// Planted-partition graph: `communities` equal groups, `intra` edges per
/// node inside the group and `inter` edges per node to other groups. Link
/// prediction on a held-out slice of such a graph separates cleanly, which
/// makes it a good quality oracle for the training pipeline.
pub fn planted_partition(
    n: usize,
    communities: usize,
    intra: usize,
    inter: usize,
    seed: u64,
) -> Vec<(NodeId, NodeId)> {
    assert!(communities >= 1 && n >= communities);
    let mut rng = crate::stream_rng(seed, &[0x5050]);
    let group = |v: usize| v % communities;
    let group_members = |c: usize| -> usize { (n - c).div_ceil(communities) };
    let mut edges = Vec::with_capacity(n * (intra + inter));
    for v in 0..n {
        let c = group(v);
        let members = group_members(c);
        for _ in 0..intra {
            // uniform other member of the same group
            let mut u = v;
            while u == v {
                u = group(v) + rng.gen_range(0..members) * communities;
                if u >= n {
                    u = v;
                }
            }
            edges.push((v as NodeId, u as NodeId));
        }
        for _ in 0..inter {
            let mut u = v;
            while u == v || group(u) == c {
                u = rng.gen_range(0..n);
            }
            edges.push((v as NodeId, u as NodeId));
        }
    }
    edges
}
