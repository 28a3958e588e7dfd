//! The five operator commands: walk, train, eval, estimate, and the
//! end-to-end run driver that pipelines walking for the next epoch with
//! training of the current one.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use neb_core::embedding::Embeddings;
use neb_core::eval::{auc, score_pairs, split_edges, EvalSplit};
use neb_core::graph::Graph;
use neb_core::perfmodel::{
    arithmetic_intensity, human_bytes, memory_cost, timeline_estimate, CostInputs,
};
use neb_core::runtime::{build_partition_noise, BlockCache, RunOptions, TrainingRun};
use neb_core::schedule::{build_schedule_with_topology, BlockGrid, RingTopology};
use neb_core::store::{epoch_dir, EpisodeSampleStore};
use neb_core::walker::run_walk_engine;
use neb_core::EmbeddingMatrix;

use crate::config::RunConfig;

/// Graph material shared by the commands: the training graph (held-out
/// edges removed, symmetrization applied) and the split it came from.
/// The split is cut on the file's raw arcs, before symmetrization, so a
/// held-out edge never leaks into training through its reverse arc.
pub struct Prepared {
    pub train_graph: Graph,
    pub split: Option<EvalSplit>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    if cfg.graph_path.is_empty() {
        bail!("graph.path is required");
    }
    let full_graph = Graph::load_edge_list(&cfg.graph_path, cfg.edge_format(), false)
        .with_context(|| format!("loading {}", cfg.graph_path))?;
    if cfg.eval_test_frac > 0.0 || cfg.eval_valid_frac > 0.0 {
        let split = split_edges(&full_graph, cfg.eval_test_frac, cfg.eval_valid_frac, cfg.seed)
            .map_err(|e| anyhow!("{e}"))?;
        let train_graph = split.train_graph(cfg.graph_symmetrize);
        Ok(Prepared {
            train_graph,
            split: Some(split),
        })
    } else {
        let edges: Vec<_> = full_graph.edges().collect();
        let train_graph = if cfg.graph_symmetrize {
            Graph::from_edges(full_graph.node_count(), &edges, true)
        } else {
            full_graph
        };
        Ok(Prepared {
            train_graph,
            split: None,
        })
    }
}

fn samples_dir(cfg: &RunConfig) -> PathBuf {
    Path::new(&cfg.out_dir).join("samples")
}

fn checkpoints_dir(cfg: &RunConfig) -> PathBuf {
    Path::new(&cfg.out_dir).join("checkpoints")
}

fn vertex_ckpt(cfg: &RunConfig, epoch: usize) -> PathBuf {
    checkpoints_dir(cfg).join(format!("epoch_{epoch}.nebe"))
}

fn context_ckpt(cfg: &RunConfig, epoch: usize) -> PathBuf {
    checkpoints_dir(cfg).join(format!("epoch_{epoch}_context.nebe"))
}

fn walk_epoch_done(cfg: &RunConfig, epoch: usize) -> bool {
    epoch_dir(&samples_dir(cfg), epoch)
        .join("MANIFEST.done")
        .exists()
}

fn walk_one_epoch(cfg: &RunConfig, g: &Graph, grid: &BlockGrid, epoch: usize) -> Result<u64> {
    let manifest = run_walk_engine(g, &cfg.walk_config(), grid, epoch, &samples_dir(cfg))
        .map_err(|e| anyhow!("walk engine epoch {epoch}: {e}"))?;
    Ok(manifest.total())
}

/// Generate `walk.epochs` epochs of samples for the training graph.
pub fn cmd_walk(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    let grid = BlockGrid::new(cfg.cluster_shape(), prepared.train_graph.node_count());
    std::fs::create_dir_all(samples_dir(cfg))?;
    for epoch in 0..cfg.walk_epochs {
        let total = walk_one_epoch(cfg, &prepared.train_graph, &grid, epoch)?;
        println!(
            "walk: epoch {epoch} -> {total} samples in {}",
            epoch_dir(&samples_dir(cfg), epoch).display()
        );
    }
    Ok(epoch_dir(&samples_dir(cfg), cfg.walk_epochs - 1).join("MANIFEST"))
}

/// Train over `train.epochs` epochs, cycling through the walked epochs
/// and generating any missing walk epoch concurrently with the previous
/// epoch's training.
pub fn cmd_train(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    let g = &prepared.train_graph;
    let n = g.node_count();
    if n == 0 {
        bail!("graph {} has no nodes", cfg.graph_path);
    }
    let shape = cfg.cluster_shape();
    let topology = RingTopology::with_socket_groups(shape, cfg.shape_socket_groups);
    let plan = build_schedule_with_topology(&topology);
    let grid = BlockGrid::new(shape, n);
    let tcfg = cfg.train_config();
    let noise = build_partition_noise(&g.degrees(), &grid, 0.75);
    let opts = RunOptions {
        profile: cfg.bandwidth_profile(),
        socket_groups: cfg.shape_socket_groups,
        deterministic: cfg.deterministic,
        ..RunOptions::default()
    };
    let run = TrainingRun::new(&plan, &grid, &noise, &tcfg, opts).map_err(|e| anyhow!("{e}"))?;

    std::fs::create_dir_all(samples_dir(cfg))?;
    std::fs::create_dir_all(checkpoints_dir(cfg))?;
    std::fs::write(Path::new(&cfg.out_dir).join("run.cfg"), cfg.to_text())?;

    let mut vertex: EmbeddingMatrix = Embeddings::init_uniform(n, tcfg.dim, tcfg.seed);
    let mut context: EmbeddingMatrix = Embeddings::zeros(n, tcfg.dim);

    let epochs = tcfg.epochs;
    let walk_cycle = cfg.walk_epochs;
    let mut final_timeline = None;

    std::thread::scope(|scope| -> Result<()> {
        let mut inflight: Option<(usize, std::thread::ScopedJoinHandle<'_, Result<u64>>)> = None;
        for epoch in 0..epochs {
            let source_epoch = epoch % walk_cycle;
            if let Some((w, handle)) = inflight.take() {
                if w == source_epoch {
                    handle.join().map_err(|_| anyhow!("walk thread panicked"))??;
                } else {
                    inflight = Some((w, handle));
                }
            }
            if !walk_epoch_done(cfg, source_epoch) {
                walk_one_epoch(cfg, g, &grid, source_epoch)?;
            }
            if epoch + 1 < epochs {
                let next_source = (epoch + 1) % walk_cycle;
                if next_source != source_epoch
                    && !walk_epoch_done(cfg, next_source)
                    && inflight.is_none()
                {
                    let grid_ref = &grid;
                    inflight = Some((
                        next_source,
                        scope.spawn(move || walk_one_epoch(cfg, g, grid_ref, next_source)),
                    ));
                }
            }

            let store = EpisodeSampleStore::open(samples_dir(cfg), source_epoch)
                .map_err(|e| anyhow!("{e}"))?;
            let cache = BlockCache::new(store);
            let (stats, timeline) = run
                .run_epoch(&cache, epoch, &mut vertex, &mut context)
                .map_err(|e| anyhow!("epoch {epoch}: {e}"))?;
            println!(
                "train: epoch {epoch}/{epochs} samples {} mean_loss {:.4} eta {:.5}",
                stats.samples,
                stats.mean_loss(),
                tcfg.eta_for_epoch(epoch)
            );
            if epoch + 1 == epochs {
                final_timeline = Some(timeline);
            }
            let at_eval_point =
                cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0 && epoch + 1 < epochs;
            if at_eval_point {
                vertex.write_nebe(vertex_ckpt(cfg, epoch)).map_err(|e| anyhow!("{e}"))?;
                context.write_nebe(context_ckpt(cfg, epoch)).map_err(|e| anyhow!("{e}"))?;
            }
        }
        if let Some((_, handle)) = inflight.take() {
            handle.join().map_err(|_| anyhow!("walk thread panicked"))??;
        }
        Ok(())
    })?;

    if let Some(timeline) = final_timeline {
        timeline
            .write_log(Path::new(&cfg.out_dir).join("timeline.log"))
            .map_err(|e| anyhow!("{e}"))?;
    }
    let final_epoch = epochs - 1;
    vertex
        .write_nebe(vertex_ckpt(cfg, final_epoch))
        .map_err(|e| anyhow!("{e}"))?;
    context
        .write_nebe(context_ckpt(cfg, final_epoch))
        .map_err(|e| anyhow!("{e}"))?;
    println!(
        "train: checkpoint {}",
        vertex_ckpt(cfg, final_epoch).display()
    );
    Ok(vertex_ckpt(cfg, final_epoch))
}

fn list_checkpoints(cfg: &RunConfig) -> Result<Vec<(usize, PathBuf)>> {
    if !cfg.eval_checkpoint.is_empty() {
        return Ok(vec![(usize::MAX, PathBuf::from(&cfg.eval_checkpoint))]);
    }
    let dir = checkpoints_dir(cfg);
    let mut found = Vec::new();
    let entries = std::fs::read_dir(&dir)
        .with_context(|| format!("no checkpoints under {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if let Some(num) = name
            .strip_prefix("epoch_")
            .and_then(|s| s.strip_suffix(".nebe"))
        {
            if let Ok(epoch) = num.parse::<usize>() {
                found.push((epoch, path));
            }
        }
    }
    found.sort();
    if found.is_empty() {
        bail!("no checkpoints under {}", dir.display());
    }
    Ok(found)
}

/// Evaluate link prediction on the held-out split for every checkpoint.
pub fn cmd_eval(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    if cfg.eval_test_frac <= 0.0 {
        bail!("eval.test_frac is zero: no held-out edges to evaluate");
    }
    let prepared = prepare(cfg)?;
    let split = prepared.split.as_ref().unwrap();
    let mode = cfg.score_mode();

    let mut report = String::new();
    report.push_str("# link prediction report\n[config]\n");
    report.push_str(&cfg.to_text());
    report.push_str("[split]\n");
    report.push_str(&format!("train_edges={}\n", split.train_edges.len()));
    report.push_str(&format!("test_edges={}\n", split.test_edges.len()));
    report.push_str(&format!("valid_edges={}\n", split.valid_edges.len()));
    report.push_str(&format!("test_negatives={}\n", split.test_negatives.len()));
    report.push_str(&format!("valid_negatives={}\n", split.valid_negatives.len()));
    report.push_str(&format!("score_mode={}\n", mode.label()));
    report.push_str("[auc]\n");

    let mut last = None;
    for (epoch, vertex_path) in list_checkpoints(cfg)? {
        let vertex = Embeddings::<f32>::read_nebe(&vertex_path).map_err(|e| anyhow!("{e}"))?;
        let context_path = if epoch == usize::MAX {
            let name = vertex_path.file_stem().unwrap().to_string_lossy().to_string();
            vertex_path.with_file_name(format!("{name}_context.nebe"))
        } else {
            context_ckpt(cfg, epoch)
        };
        let context = if context_path.exists() {
            Embeddings::<f32>::read_nebe(&context_path).map_err(|e| anyhow!("{e}"))?
        } else {
            if mode == neb_core::eval::ScoreMode::VertexContext {
                bail!(
                    "score mode vertex-context needs {} next to the checkpoint",
                    context_path.display()
                );
            }
            Embeddings::zeros(vertex.rows(), vertex.dim())
        };
        if vertex.rows() != split.node_count {
            bail!(
                "checkpoint {} covers {} nodes, graph has {}",
                vertex_path.display(),
                vertex.rows(),
                split.node_count
            );
        }
        let pos = score_pairs(&split.test_edges, &vertex, &context, mode)
            .map_err(|e| anyhow!("{e}"))?;
        let neg = score_pairs(&split.test_negatives, &vertex, &context, mode)
            .map_err(|e| anyhow!("{e}"))?;
        let test_auc = auc(&pos, &neg).map_err(|e| anyhow!("{e}"))?;
        let valid_auc = if split.valid_edges.is_empty() {
            None
        } else {
            let pos = score_pairs(&split.valid_edges, &vertex, &context, mode)
                .map_err(|e| anyhow!("{e}"))?;
            let neg = score_pairs(&split.valid_negatives, &vertex, &context, mode)
                .map_err(|e| anyhow!("{e}"))?;
            Some(auc(&pos, &neg).map_err(|e| anyhow!("{e}"))?)
        };
        let epoch_label = if epoch == usize::MAX {
            "-".to_string()
        } else {
            epoch.to_string()
        };
        let valid_label = valid_auc
            .map(|a| format!("{a:.6}"))
            .unwrap_or_else(|| "-".to_string());
        report.push_str(&format!(
            "epoch {epoch_label} test {test_auc:.6} valid {valid_label}\n"
        ));
        println!("eval: epoch {epoch_label} test AUC {test_auc:.4} valid AUC {valid_label}");
        last = Some(test_auc);
    }
    let _ = last;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let report_path = Path::new(&cfg.out_dir).join("eval_report.txt");
    std::fs::write(&report_path, report)?;
    Ok(report_path)
}

/// Print the memory and pipeline-time estimates.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<()> {
    let (nodes, edges) = if cfg.estimate_nodes > 0 || cfg.graph_path.is_empty() {
        (cfg.estimate_nodes, cfg.estimate_edges)
    } else {
        let g = Graph::load_edge_list(&cfg.graph_path, cfg.edge_format(), false)
            .with_context(|| format!("loading {}", cfg.graph_path))?;
        (g.node_count() as u64, g.edge_count() as u64)
    };
    let inputs = CostInputs {
        node_count: nodes,
        edge_count: edges,
        aug_factor: (cfg.walk_distance * cfg.walk_context) as u64,
        dim: cfg.train_dim as u32,
        id_bytes: cfg.estimate_id_bytes,
        real_bytes: cfg.estimate_real_bytes,
        negatives: cfg.train_negatives as u32,
    };
    let mem = memory_cost(&inputs);
    let intensity = arithmetic_intensity(&inputs);
    let shape = cfg.cluster_shape();
    let est = timeline_estimate(shape, &inputs, &cfg.bandwidth_profile(), cfg.compute_gflops * 1e9);

    println!("memory cost");
    let rows = [
        ("nodes", mem.nodes_bytes),
        ("edges", mem.edges_bytes),
        ("augmented edges", mem.augmented_bytes),
        ("vertex embeddings", mem.vertex_emb_bytes),
        ("context embeddings", mem.context_emb_bytes),
        ("total", mem.total_bytes()),
    ];
    for (name, bytes) in rows {
        println!("  {name:<20} {:>14}  ({bytes} bytes)", human_bytes(bytes));
    }
    println!("arithmetic intensity");
    println!("  flops/sample         {:>14.1}", intensity.flops_per_sample);
    println!("  bytes/sample         {:>14.1}", intensity.bytes_per_sample);
    println!("  flops/byte           {:>14.3}", intensity.intensity);
    println!(
        "pipeline estimate ({} nodes x {} workers x {} sub-parts, {} GFLOP/s)",
        shape.num_nodes, shape.workers_per_node, shape.subparts_per_worker, cfg.compute_gflops
    );
    println!("  episode              {:>14.3} s", est.episode_seconds);
    println!("  train (stage 3)      {:>14.3} s", est.train_seconds);
    println!("  sample load (1)      {:>14.3} s", est.sample_load_seconds);
    println!("  p2p per exchange (4) {:>14.6} s", est.p2p_per_exchange_seconds);
    println!("  p2p serial total (4) {:>14.3} s", est.p2p_serial_seconds);
    println!("  staging total (2/5)  {:>14.3} s", est.staging_seconds);
    println!("  inter-node total (6) {:>14.3} s", est.inter_node_seconds);
    println!("  prefetch total (7)   {:>14.3} s", est.prefetch_seconds);

    if cfg.estimate_machine {
        println!("nodes_bytes={}", mem.nodes_bytes);
        println!("edges_bytes={}", mem.edges_bytes);
        println!("augmented_bytes={}", mem.augmented_bytes);
        println!("vertex_emb_bytes={}", mem.vertex_emb_bytes);
        println!("context_emb_bytes={}", mem.context_emb_bytes);
        println!("flops_per_sample={}", intensity.flops_per_sample);
        println!("bytes_per_sample={}", intensity.bytes_per_sample);
        println!("intensity={}", intensity.intensity);
        println!("episode_seconds={}", est.episode_seconds);
        println!("p2p_per_exchange_seconds={}", est.p2p_per_exchange_seconds);
    }
    Ok(())
}

/// End-to-end driver: walk + train (pipelined) followed by evaluation.
pub fn cmd_run(cfg: &RunConfig) -> Result<()> {
    let checkpoint = cmd_train(cfg)?;
    if cfg.eval_test_frac > 0.0 {
        let report = cmd_eval(cfg)?;
        println!("run: report {}", report.display());
    } else {
        println!("run: checkpoint {}", checkpoint.display());
    }
    Ok(())
}
