//! Graph storage and 2D partitioning.
//!
//! Graphs are kept in compressed sparse row form over dense integer node
//! ids. Partitioning is by contiguous id range, so partition membership is
//! a binary search over boundaries and extracting a sub-range of embedding
//! rows is a single slice. Edge samples are assigned to 2D blocks `(i, j)`
//! by the partitions of their source and destination nodes; blocks with
//! pairwise distinct `i` and `j` touch disjoint embedding rows, which is
//! what lets workers train them concurrently without locks.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, NodeId, Result};

pub const EDGE_MAGIC: &[u8; 4] = b"NEBG";
pub const EDGE_FORMAT_VERSION: u8 = 1;

/// Input encoding for [`Graph::load_edge_list`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeListFormat {
    /// UTF-8 lines of "src dst"; `#`-prefixed comment lines and blank
    /// lines are skipped.
    Text,
    /// 16-byte header (magic "NEBG", version, id width, reserved, edge
    /// count) followed by little-endian id pairs.
    Binary,
}

/// Immutable CSR graph. `offsets` has `node_count + 1` entries and
/// `targets[offsets[v]..offsets[v+1]]` are the out-neighbors of `v`,
/// sorted ascending. Parallel edges are preserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    directed: bool,
}

impl Graph {
    /// Build from an edge list. `node_count` must cover every id. With
    /// `symmetrize`, the reverse of every non-loop edge is added and the
    /// graph is marked undirected.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId)], symmetrize: bool) -> Graph {
        let mut degree = vec![0usize; node_count];
        for &(u, v) in edges {
            assert!((u as usize) < node_count && (v as usize) < node_count);
            degree[u as usize] += 1;
            if symmetrize && u != v {
                degree[v as usize] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor = offsets[..node_count].to_vec();
        let mut targets = vec![0 as NodeId; acc];
        for &(u, v) in edges {
            targets[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            if symmetrize && u != v {
                targets[cursor[v as usize]] = u;
                cursor[v as usize] += 1;
            }
        }
        for v in 0..node_count {
            targets[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Graph {
            offsets,
            targets,
            directed: !symmetrize,
        }
    }

    /// Load an edge list file. Node count is `1 + max id seen`.
    pub fn load_edge_list(
        path: impl AsRef<Path>,
        format: EdgeListFormat,
        symmetrize: bool,
    ) -> Result<Graph> {
        let edges = match format {
            EdgeListFormat::Text => read_text_edge_list(path.as_ref())?,
            EdgeListFormat::Binary => read_binary_edge_list(path.as_ref())?,
        };
        let node_count = edges
            .iter()
            .map(|&(u, v)| u.max(v) as usize + 1)
            .max()
            .unwrap_or(0);
        Ok(Graph::from_edges(node_count, &edges, symmetrize))
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Out-degree of every node, the weight source for noise tables.
    pub fn degrees(&self) -> Vec<u32> {
        (0..self.node_count())
            .map(|v| (self.offsets[v + 1] - self.offsets[v]) as u32)
            .collect()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        if u as usize >= self.node_count() {
            return false;
        }
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// All edges in canonical (source-major, target-sorted) order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u as NodeId)
                .iter()
                .map(move |&v| (u as NodeId, v))
        })
    }

    pub fn write_binary_edge_list(&self, path: impl AsRef<Path>, id_width: IdWidth) -> Result<()> {
        write_binary_edge_list(path, self.edges(), self.edge_count() as u64, id_width)
    }

    pub fn write_text_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (u, v) in self.edges() {
            writeln!(w, "{} {}", u, v).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// CSR invariants, checked by tests and after deserialization.
    pub fn check_invariants(&self) -> Result<()> {
        if *self.offsets.first().unwrap_or(&0) != 0 {
            return Err(Error::InvalidArgument("offsets must start at 0".into()));
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(
                "offsets must be non-decreasing".into(),
            ));
        }
        if *self.offsets.last().unwrap() != self.targets.len() {
            return Err(Error::InvalidArgument(
                "offsets must end at edge count".into(),
            ));
        }
        let n = self.node_count() as u64;
        for &t in &self.targets {
            if t as u64 >= n {
                return Err(Error::NodeOutOfRange {
                    id: t as u64,
                    node_count: n,
                });
            }
        }
        Ok(())
    }
}

/// Id width used by the binary edge-list and sample-file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdWidth {
    U32,
    U64,
}

impl IdWidth {
    pub fn bytes(self) -> usize {
        match self {
            IdWidth::U32 => 4,
            IdWidth::U64 => 8,
        }
    }

    pub fn from_byte(b: u8, path: &Path) -> Result<IdWidth> {
        match b {
            4 => Ok(IdWidth::U32),
            8 => Ok(IdWidth::U64),
            other => Err(Error::format(path, format!("unsupported id width {other}"))),
        }
    }
}

fn read_text_edge_list(path: &Path) -> Result<Vec<(NodeId, NodeId)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno,
                    msg: format!("expected two node ids, got {trimmed:?}"),
                })
            }
        };
        let parse = |tok: &str| -> Result<NodeId> {
            let wide: u64 = tok.parse().map_err(|_| Error::Parse {
                path: path.into(),
                line: lineno,
                msg: format!("invalid node id {tok:?}"),
            })?;
            NodeId::try_from(wide).map_err(|_| Error::Parse {
                path: path.into(),
                line: lineno,
                msg: format!("node id {wide} overflows 32-bit ids"),
            })
        };
        edges.push((parse(a)?, parse(b)?));
    }
    Ok(edges)
}

fn read_binary_edge_list(path: &Path) -> Result<Vec<(NodeId, NodeId)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|e| Error::io(path, e))?;
    if &header[0..4] != EDGE_MAGIC {
        return Err(Error::format(path, "bad magic, expected NEBG"));
    }
    if header[4] != EDGE_FORMAT_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported version {}", header[4]),
        ));
    }
    let width = IdWidth::from_byte(header[5], path)?;
    let edge_count = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    let pair_bytes = 2 * width.bytes();
    if buf.len() != edge_count as usize * pair_bytes {
        return Err(Error::format(
            path,
            format!(
                "expected {} edge pairs ({} bytes), found {} bytes",
                edge_count,
                edge_count as usize * pair_bytes,
                buf.len()
            ),
        ));
    }
    let mut edges = Vec::with_capacity(edge_count as usize);
    let read_id = |chunk: &[u8]| -> Result<NodeId> {
        let wide = match width {
            IdWidth::U32 => u32::from_le_bytes(chunk.try_into().unwrap()) as u64,
            IdWidth::U64 => u64::from_le_bytes(chunk.try_into().unwrap()),
        };
        NodeId::try_from(wide).map_err(|_| {
            Error::format(path, format!("node id {wide} overflows 32-bit ids"))
        })
    };
    for pair in buf.chunks_exact(pair_bytes) {
        let (a, b) = pair.split_at(width.bytes());
        edges.push((read_id(a)?, read_id(b)?));
    }
    Ok(edges)
}

pub fn write_binary_edge_list(
    path: impl AsRef<Path>,
    edges: impl Iterator<Item = (NodeId, NodeId)>,
    edge_count: u64,
    id_width: IdWidth,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = [0u8; 16];
    header[0..4].copy_from_slice(EDGE_MAGIC);
    header[4] = EDGE_FORMAT_VERSION;
    header[5] = id_width.bytes() as u8;
    header[8..16].copy_from_slice(&edge_count.to_le_bytes());
    w.write_all(&header).map_err(|e| Error::io(path, e))?;
    let mut written = 0u64;
    for (u, v) in edges {
        match id_width {
            IdWidth::U32 => {
                w.write_all(&u.to_le_bytes()).map_err(|e| Error::io(path, e))?;
                w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
            }
            IdWidth::U64 => {
                w.write_all(&(u as u64).to_le_bytes())
                    .map_err(|e| Error::io(path, e))?;
                w.write_all(&(v as u64).to_le_bytes())
                    .map_err(|e| Error::io(path, e))?;
            }
        }
        written += 1;
    }
    if written != edge_count {
        return Err(Error::format(
            path,
            format!("edge count mismatch: header {edge_count}, wrote {written}"),
        ));
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Contiguous-range partition of `[0, node_count)` into `num_partitions`
/// ranges whose sizes differ by at most one, larger ranges first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMap {
    boundaries: Vec<NodeId>,
}

impl PartitionMap {
    pub fn new(node_count: usize, num_partitions: usize) -> PartitionMap {
        assert!(num_partitions >= 1, "need at least one partition");
        let base = node_count / num_partitions;
        let rem = node_count % num_partitions;
        let mut boundaries = Vec::with_capacity(num_partitions + 1);
        let mut at = 0usize;
        boundaries.push(0);
        for i in 0..num_partitions {
            at += base + usize::from(i < rem);
            boundaries.push(at as NodeId);
        }
        PartitionMap { boundaries }
    }

    /// Build directly from boundaries (first 0, last node_count,
    /// non-decreasing).
    pub fn from_boundaries(boundaries: Vec<NodeId>) -> PartitionMap {
        assert!(boundaries.len() >= 2);
        assert_eq!(boundaries[0], 0);
        assert!(boundaries.windows(2).all(|w| w[0] <= w[1]));
        PartitionMap { boundaries }
    }

    pub fn num_partitions(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn node_count(&self) -> usize {
        *self.boundaries.last().unwrap() as usize
    }

    pub fn boundaries(&self) -> &[NodeId] {
        &self.boundaries
    }

    pub fn range(&self, part: usize) -> std::ops::Range<usize> {
        self.boundaries[part] as usize..self.boundaries[part + 1] as usize
    }

    pub fn len_of(&self, part: usize) -> usize {
        self.range(part).len()
    }

    /// True when more partitions were requested than there are nodes, so
    /// some trailing ranges are empty.
    pub fn has_empty(&self) -> bool {
        self.boundaries.windows(2).any(|w| w[0] == w[1])
    }

    /// Partition holding `id`. Empty ranges can never hold anything, which
    /// the search respects because their boundaries coincide.
    pub fn partition_of(&self, id: NodeId) -> Result<usize> {
        if id as usize >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                id: id as u64,
                node_count: self.node_count() as u64,
            });
        }
        let idx = self.boundaries.partition_point(|&b| b <= id);
        Ok(idx - 1)
    }

    /// 2D block (source partition, destination partition) of an edge.
    pub fn block_of(&self, src: NodeId, dst: NodeId) -> Result<(usize, usize)> {
        Ok((self.partition_of(src)?, self.partition_of(dst)?))
    }

    /// FNV-1a over the boundary list; recorded in sample manifests so the
    /// trainer can refuse files cut for a different grid.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &b in &self.boundaries {
            for byte in b.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// Even node partitioning for a graph, sizes differing by at most one.
pub fn partition_nodes(g: &Graph, num_partitions: usize) -> PartitionMap {
    PartitionMap::new(g.node_count(), num_partitions)
}

/// 2D block id of an edge under a partition map.
pub fn block_of(src: NodeId, dst: NodeId, pm: &PartitionMap) -> Result<(usize, usize)> {
    pm.block_of(src, dst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn from_edges_direct_transcription() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)], false);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert_eq!(g.neighbors(1), &[2]);
        assert_eq!(g.neighbors(2), &[] as &[NodeId]);
        g.check_invariants().unwrap();
    }

    #[test]
    fn load_text_simple() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        std::fs::write(&path, "0 1\n1 2\n0 2").unwrap();
        let g = Graph::load_edge_list(&path, EdgeListFormat::Text, false).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn load_text_skips_comments_and_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        std::fs::write(&path, "# header\n\n0 1\n# mid\n2\t3\n").unwrap();
        let g = Graph::load_edge_list(&path, EdgeListFormat::Text, false).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn load_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.txt");
        std::fs::write(&path, "").unwrap();
        let g = Graph::load_edge_list(&path, EdgeListFormat::Text, false).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "0 1\nnot numbers\n").unwrap();
        let err = Graph::load_edge_list(&path, EdgeListFormat::Text, false).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn id_overflow_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wide.txt");
        std::fs::write(&path, format!("0 {}\n", u64::from(u32::MAX) + 1)).unwrap();
        let err = Graph::load_edge_list(&path, EdgeListFormat::Text, false).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
    }

    #[test]
    fn text_and_binary_load_identically() {
        let mut rng = crate::stream_rng(11, &[0]);
        for width in [IdWidth::U32, IdWidth::U64] {
            let n = 50usize;
            let edges: Vec<(NodeId, NodeId)> = (0..300)
                .map(|_| (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32)))
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let text = dir.path().join("g.txt");
            let bin = dir.path().join("g.bin");
            let mut body = String::new();
            for &(u, v) in &edges {
                body.push_str(&format!("{u} {v}\n"));
            }
            std::fs::write(&text, body).unwrap();
            write_binary_edge_list(&bin, edges.iter().copied(), edges.len() as u64, width)
                .unwrap();
            let gt = Graph::load_edge_list(&text, EdgeListFormat::Text, false).unwrap();
            let gb = Graph::load_edge_list(&bin, EdgeListFormat::Binary, false).unwrap();
            assert_eq!(gt, gb);
        }
    }

    #[test]
    fn binary_truncation_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        write_binary_edge_list(&path, [(0u32, 1u32)].into_iter(), 1, IdWidth::U32).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
        let err = Graph::load_edge_list(&path, EdgeListFormat::Binary, false).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err:?}");
    }

    #[test]
    fn symmetrize_adds_reverse_edges() {
        let g = Graph::from_edges(3, &[(0, 1), (2, 2)], true);
        assert!(g.has_edge(1, 0));
        assert!(g.has_edge(0, 1));
        // self loop not duplicated
        assert_eq!(g.out_degree(2), 1);
        assert!(!g.is_directed());
    }

    #[test]
    fn partition_even_split() {
        let pm = PartitionMap::new(8, 2);
        assert_eq!(pm.boundaries(), &[0, 4, 8]);
    }

    #[test]
    fn partition_remainder_goes_early() {
        let pm = PartitionMap::new(9, 2);
        assert_eq!(pm.boundaries(), &[0, 5, 9]);
    }

    #[test]
    fn partition_large_balanced() {
        let pm = PartitionMap::new(1_138_499, 16);
        let sizes: Vec<usize> = (0..16).map(|i| pm.len_of(i)).collect();
        let total: usize = sizes.iter().sum();
        assert_eq!(total, 1_138_499);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn more_partitions_than_nodes_flags_empty() {
        let pm = PartitionMap::new(3, 5);
        assert!(pm.has_empty());
        let parts: Vec<usize> = (0..3).map(|v| pm.partition_of(v).unwrap()).collect();
        assert_eq!(parts, vec![0, 1, 2]);
    }

    #[test]
    fn block_of_single_partition() {
        let pm = PartitionMap::new(1, 1);
        assert_eq!(pm.block_of(0, 0).unwrap(), (0, 0));
    }

    #[test]
    fn block_of_range_lookup() {
        let pm = PartitionMap::from_boundaries(vec![0, 4, 8]);
        assert_eq!(pm.block_of(5, 2).unwrap(), (1, 0));
    }

    #[test]
    fn block_of_out_of_range() {
        let pm = PartitionMap::new(4, 2);
        assert!(matches!(
            pm.partition_of(4),
            Err(Error::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn partition_of_agrees_with_linear_scan() {
        let mut rng = crate::stream_rng(3, &[7]);
        for _ in 0..200 {
            let n = rng.gen_range(1..500usize);
            let p = rng.gen_range(1..20usize);
            let pm = PartitionMap::new(n, p);
            for _ in 0..50 {
                let id = rng.gen_range(0..n as u32);
                let fast = pm.partition_of(id).unwrap();
                let slow = (0..p)
                    .find(|&i| pm.range(i).contains(&(id as usize)))
                    .unwrap();
                assert_eq!(fast, slow);
            }
        }
    }

    #[test]
    fn partitions_cover_disjointly() {
        let mut rng = crate::stream_rng(5, &[9]);
        for _ in 0..100 {
            let n = rng.gen_range(0..400usize);
            let p = rng.gen_range(1..12usize);
            let pm = PartitionMap::new(n, p);
            let total: usize = (0..p).map(|i| pm.len_of(i)).sum();
            assert_eq!(total, n);
            assert_eq!(pm.boundaries()[0], 0);
            assert_eq!(*pm.boundaries().last().unwrap() as usize, n);
        }
    }

    #[test]
    fn fingerprint_distinguishes_maps() {
        let a = PartitionMap::new(100, 4);
        let b = PartitionMap::new(100, 5);
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), PartitionMap::new(100, 4).fingerprint());
    }
}
