//! Disk layout shared by the walk engine (producer) and the training
//! engine (consumer):
//!
//! ```text
//! out_dir/epoch_{e}/episode_{s}/block_{i}_{j}.bin   sample pairs
//! out_dir/epoch_{e}/MANIFEST                        counts + config echo
//! out_dir/epoch_{e}/MANIFEST.done                   completion marker
//! ```
//!
//! Block files carry a 24-byte header (magic "NEBS") followed by
//! little-endian (src, dst) id pairs. The manifest records per-block
//! sample counts and a fingerprint of the partition grid, so a trainer
//! configured with a different grid refuses the files instead of
//! training garbage.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::{Error, NodeId, Result};

pub const SAMPLE_MAGIC: &[u8; 4] = b"NEBS";
pub const SAMPLE_FORMAT_VERSION: u8 = 1;

pub fn epoch_dir(root: &Path, epoch: usize) -> PathBuf {
    root.join(format!("epoch_{epoch}"))
}

pub fn episode_dir(root: &Path, epoch: usize, episode: usize) -> PathBuf {
    epoch_dir(root, epoch).join(format!("episode_{episode}"))
}

pub fn block_file_name(src_block: usize, dst_block: usize) -> String {
    format!("block_{src_block}_{dst_block}.bin")
}

/// Write one block file. On any IO failure the partial file is removed
/// and the error names the path.
pub fn write_block_file(path: &Path, samples: &[(NodeId, NodeId)], seed: u64) -> Result<()> {
    let attempt = || -> std::io::Result<()> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        let mut header = [0u8; 24];
        header[0..4].copy_from_slice(SAMPLE_MAGIC);
        header[4] = SAMPLE_FORMAT_VERSION;
        header[5] = 4; // id width
        header[8..16].copy_from_slice(&(samples.len() as u64).to_le_bytes());
        header[16..24].copy_from_slice(&seed.to_le_bytes());
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(8 * 1024);
        for &(src, dst) in samples {
            buf.extend_from_slice(&src.to_le_bytes());
            buf.extend_from_slice(&dst.to_le_bytes());
            if buf.len() >= 8 * 1024 {
                w.write_all(&buf)?;
                buf.clear();
            }
        }
        w.write_all(&buf)?;
        w.flush()
    };
    attempt().map_err(|e| {
        let _ = std::fs::remove_file(path);
        Error::io(path, e)
    })
}

pub fn read_block_file(path: &Path) -> Result<Vec<(NodeId, NodeId)>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = [0u8; 24];
    file.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    if &header[0..4] != SAMPLE_MAGIC {
        return Err(Error::format(path, "bad magic, expected NEBS"));
    }
    if header[4] != SAMPLE_FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported version {}", header[4])));
    }
    if header[5] != 4 {
        return Err(Error::format(path, format!("unsupported id width {}", header[5])));
    }
    let count = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    if buf.len() != count * 8 {
        return Err(Error::format(
            path,
            format!("expected {} samples ({} bytes), found {} bytes", count, count * 8, buf.len()),
        ));
    }
    Ok(buf
        .chunks_exact(8)
        .map(|c| {
            (
                u32::from_le_bytes(c[0..4].try_into().unwrap()),
                u32::from_le_bytes(c[4..8].try_into().unwrap()),
            )
        })
        .collect())
}

/// Per-epoch sample manifest: counts for every (episode, src, dst) block
/// plus an echo of the walk configuration that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub epoch: usize,
    pub episodes: usize,
    pub src_parts: usize,
    pub dst_parts: usize,
    pub node_count: usize,
    pub grid_fingerprint: u64,
    pub seed: u64,
    pub walk_distance: usize,
    pub context_length: usize,
    pub walks_per_node: usize,
    pub order: String,
    /// counts[episode][src][dst], flattened
    pub counts: Vec<u64>,
}

impl Manifest {
    fn idx(&self, episode: usize, src: usize, dst: usize) -> usize {
        (episode * self.src_parts + src) * self.dst_parts + dst
    }

    pub fn block_count(&self, episode: usize, src: usize, dst: usize) -> u64 {
        self.counts[self.idx(episode, src, dst)]
    }

    pub fn episode_total(&self, episode: usize) -> u64 {
        let per = self.src_parts * self.dst_parts;
        self.counts[episode * per..(episode + 1) * per].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("format=neb-samples\n");
        s.push_str("version=1\n");
        s.push_str(&format!("epoch={}\n", self.epoch));
        s.push_str(&format!("episodes={}\n", self.episodes));
        s.push_str(&format!("src_parts={}\n", self.src_parts));
        s.push_str(&format!("dst_parts={}\n", self.dst_parts));
        s.push_str(&format!("node_count={}\n", self.node_count));
        s.push_str(&format!("grid_fingerprint={:016x}\n", self.grid_fingerprint));
        s.push_str(&format!("seed={}\n", self.seed));
        s.push_str(&format!("walk.distance={}\n", self.walk_distance));
        s.push_str(&format!("walk.context={}\n", self.context_length));
        s.push_str(&format!("walk.walks_per_node={}\n", self.walks_per_node));
        s.push_str(&format!("walk.order={}\n", self.order));
        s.push_str(&format!("total={}\n", self.total()));
        for e in 0..self.episodes {
            for i in 0..self.src_parts {
                for j in 0..self.dst_parts {
                    let c = self.block_count(e, i, j);
                    if c != 0 {
                        s.push_str(&format!("block {e} {i} {j} {c}\n"));
                    }
                }
            }
        }
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Manifest> {
        let mut kv = std::collections::HashMap::new();
        let mut blocks: Vec<(usize, usize, usize, u64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("block ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 4 {
                    return Err(Error::Parse {
                        path: path.into(),
                        line: lineno + 1,
                        msg: "block line needs episode src dst count".into(),
                    });
                }
                let p = |s: &str| -> Result<u64> {
                    s.parse().map_err(|_| Error::Parse {
                        path: path.into(),
                        line: lineno + 1,
                        msg: format!("bad number {s:?}"),
                    })
                };
                blocks.push((
                    p(parts[0])? as usize,
                    p(parts[1])? as usize,
                    p(parts[2])? as usize,
                    p(parts[3])?,
                ));
            } else if let Some((k, v)) = line.split_once('=') {
                kv.insert(k.to_string(), v.to_string());
            } else {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("unrecognized line {line:?}"),
                });
            }
        }
        let get = |key: &str| -> Result<String> {
            kv.get(key)
                .cloned()
                .ok_or_else(|| Error::Manifest(format!("{} missing key {key}", path.display())))
        };
        let get_num = |key: &str| -> Result<u64> {
            get(key)?.parse().map_err(|_| {
                Error::Manifest(format!("{}: key {key} is not a number", path.display()))
            })
        };
        if get("format")? != "neb-samples" {
            return Err(Error::Manifest(format!("{} is not a sample manifest", path.display())));
        }
        let mut m = Manifest {
            epoch: get_num("epoch")? as usize,
            episodes: get_num("episodes")? as usize,
            src_parts: get_num("src_parts")? as usize,
            dst_parts: get_num("dst_parts")? as usize,
            node_count: get_num("node_count")? as usize,
            grid_fingerprint: u64::from_str_radix(&get("grid_fingerprint")?, 16)
                .map_err(|_| Error::Manifest("bad grid fingerprint".into()))?,
            seed: get_num("seed")?,
            walk_distance: get_num("walk.distance")? as usize,
            context_length: get_num("walk.context")? as usize,
            walks_per_node: get_num("walk.walks_per_node")? as usize,
            order: get("walk.order")?,
            counts: Vec::new(),
        };
        m.counts = vec![0; m.episodes * m.src_parts * m.dst_parts];
        for (e, i, j, c) in blocks {
            if e >= m.episodes || i >= m.src_parts || j >= m.dst_parts {
                return Err(Error::Manifest(format!(
                    "block ({e},{i},{j}) outside the declared grid"
                )));
            }
            let idx = m.idx(e, i, j);
            m.counts[idx] = c;
        }
        let declared = get_num("total")?;
        if declared != m.total() {
            return Err(Error::Manifest(format!(
                "total {} does not match block sum {}",
                declared,
                m.total()
            )));
        }
        Ok(m)
    }

    pub fn write_to(&self, epoch_dir: &Path) -> Result<()> {
        let path = epoch_dir.join("MANIFEST");
        std::fs::write(&path, self.to_text()).map_err(|e| Error::io(&path, e))?;
        let done = epoch_dir.join("MANIFEST.done");
        std::fs::write(&done, b"").map_err(|e| Error::io(&done, e))
    }

    pub fn read_from(epoch_dir: &Path) -> Result<Manifest> {
        let path = epoch_dir.join("MANIFEST");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Manifest::from_text(&text, &path)
    }
}

/// Read access to one epoch's episode-partitioned samples.
#[derive(Debug, Clone)]
pub struct EpisodeSampleStore {
    root: PathBuf,
    epoch: usize,
    manifest: Manifest,
}

impl EpisodeSampleStore {
    /// Open an epoch directory. Requires the completion marker, so a
    /// concurrently running walk engine is never half-read.
    pub fn open(root: impl Into<PathBuf>, epoch: usize) -> Result<EpisodeSampleStore> {
        let root = root.into();
        let dir = epoch_dir(&root, epoch);
        if !dir.join("MANIFEST.done").exists() {
            return Err(Error::Manifest(format!(
                "epoch {epoch} not complete: {} missing",
                dir.join("MANIFEST.done").display()
            )));
        }
        let manifest = Manifest::read_from(&dir)?;
        if manifest.epoch != epoch {
            return Err(Error::Manifest(format!(
                "manifest in {} declares epoch {}, expected {epoch}",
                dir.display(),
                manifest.epoch
            )));
        }
        Ok(EpisodeSampleStore { root, epoch, manifest })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn block_path(&self, episode: usize, src: usize, dst: usize) -> Result<PathBuf> {
        let path =
            episode_dir(&self.root, self.epoch, episode).join(block_file_name(src, dst));
        if !path.exists() {
            return Err(Error::Manifest(format!(
                "block ({episode},{src},{dst}) missing: {}",
                path.display()
            )));
        }
        Ok(path)
    }

    pub fn read_block(&self, episode: usize, src: usize, dst: usize) -> Result<Vec<(NodeId, NodeId)>> {
        let path = self.block_path(episode, src, dst)?;
        let samples = read_block_file(&path)?;
        let declared = self.manifest.block_count(episode, src, dst);
        if samples.len() as u64 != declared {
            return Err(Error::Manifest(format!(
                "block ({episode},{src},{dst}) holds {} samples, manifest says {declared}",
                samples.len()
            )));
        }
        Ok(samples)
    }
}
