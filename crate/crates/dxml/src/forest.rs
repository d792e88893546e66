//! Forest training, prediction aggregation, model serialization, and
//! work-span instrumentation.
//!
//! The model file is a chunked little-endian container: magic `DXMF`, a
//! format version, the training configuration, then one length-prefixed
//! block per tree. Tree blocks are the unit the distributed gather ships
//! and accounts for, so their encoding is byte-stable.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::projection::ProjectionSpec;
use crate::sparse::{Dataset, SparseVec};
use crate::tree::{train_tree, NodeClassifier, TrainConfig, TrainedTree, TreeNode, TreeStats};

pub const MODEL_MAGIC: [u8; 4] = *b"DXMF";
pub const FORMAT_VERSION: u32 = 1;

/// A trained forest: every tree plus the configuration and dataset shape it
/// was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub format_version: u32,
    pub config: TrainConfig,
    pub d_x: usize,
    pub d_y: usize,
    pub trees: Vec<TrainedTree>,
}

/// Work-span summary for one tree: total work T1, critical-path work T∞,
/// and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkSpanReport {
    pub t1: f64,
    pub t_inf: f64,
    pub parallelism: f64,
    pub depth: usize,
}

/// Derive the work-span numbers from a tree's instrumentation.
pub fn work_span_report(stats: &TreeStats) -> WorkSpanReport {
    let t1 = stats.total_work;
    let t_inf = stats.critical_path_work;
    let parallelism = if t_inf > 0.0 { t1 / t_inf } else { 1.0 };
    WorkSpanReport {
        t1,
        t_inf,
        parallelism,
        depth: stats.depth,
    }
}

/// Train trees `range.start..range.end` of the forest with the exact seeds a
/// full single-process run would give them.
pub fn train_tree_range(
    dataset: &Dataset,
    cfg: &TrainConfig,
    range: std::ops::Range<usize>,
) -> Result<Vec<(TrainedTree, TreeStats)>> {
    cfg.validate()?;
    if range.end > cfg.n_trees {
        return Err(Error::InvalidConfig(format!(
            "tree range {:?} exceeds forest size {}",
            range, cfg.n_trees
        )));
    }
    let indices: Vec<u32> = (0..dataset.n() as u32).collect();
    Ok(range
        .into_par_iter()
        .map(|tree_index| train_tree(dataset, &indices, cfg, tree_index))
        .collect())
}

/// Train the full forest. Trees are independent and may train concurrently;
/// the result is identical for any thread count.
pub fn train_forest(
    dataset: &Dataset,
    cfg: &TrainConfig,
) -> Result<(ForestModel, Vec<TreeStats>, Vec<WorkSpanReport>)> {
    let trained = train_tree_range(dataset, cfg, 0..cfg.n_trees)?;
    let mut trees = Vec::with_capacity(trained.len());
    let mut stats = Vec::with_capacity(trained.len());
    let mut spans = Vec::with_capacity(trained.len());
    for (tree, tree_stats) in trained {
        spans.push(work_span_report(&tree_stats));
        stats.push(tree_stats);
        trees.push(tree);
    }
    Ok((
        ForestModel {
            format_version: FORMAT_VERSION,
            config: *cfg,
            d_x: dataset.d_x(),
            d_y: dataset.d_y(),
            trees,
        },
        stats,
        spans,
    ))
}

/// Forest prediction: the mean of the per-tree leaf label vectors, ranked by
/// descending score with ties broken by ascending label index. The ranking
/// is padded with zero-scored labels (lowest index first) up to `top_k`
/// entries, capped by the label dimension.
pub fn predict_forest(
    model: &ForestModel,
    features: &SparseVec,
    top_k: usize,
) -> Vec<(usize, f64)> {
    assert!(top_k >= 1, "top_k must be at least 1");
    let mut scores = vec![0.0f64; model.d_y];
    for tree in &model.trees {
        for (col, val) in crate::tree::predict_tree(tree, features).iter() {
            scores[col as usize] += val;
        }
    }
    let inv = 1.0 / model.trees.len() as f64;
    let mut ranked: Vec<(usize, f64)> = scores
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s != 0.0)
        .map(|(label, &s)| (label, s * inv))
        .collect();
    ranked.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    if ranked.len() < top_k {
        let mut scored = vec![false; model.d_y];
        for &(label, _) in &ranked {
            scored[label] = true;
        }
        for (label, &taken) in scored.iter().enumerate() {
            if ranked.len() >= top_k {
                break;
            }
            if !taken {
                ranked.push((label, 0.0));
            }
        }
    }
    ranked.truncate(top_k);
    ranked
}

fn write_sparse_vec<W: Write>(vec: &SparseVec, writer: &mut W) -> io::Result<()> {
    writer.write_u64::<LittleEndian>(vec.nnz() as u64)?;
    for (col, val) in vec.iter() {
        writer.write_u32::<LittleEndian>(col)?;
        writer.write_f64::<LittleEndian>(val)?;
    }
    Ok(())
}

fn read_sparse_vec<R: Read>(reader: &mut R, dim: usize) -> Result<SparseVec> {
    let count = reader.read_u64::<LittleEndian>()? as usize;
    let mut entries = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let col = reader.read_u32::<LittleEndian>()?;
        let val = reader.read_f64::<LittleEndian>()?;
        entries.push((col, val));
    }
    SparseVec::new(dim, entries).map_err(|e| Error::Corrupt(e.to_string()))
}

fn write_node<W: Write>(node: &TreeNode, writer: &mut W) -> io::Result<()> {
    match node {
        TreeNode::Leaf { label_mean } => {
            writer.write_u8(0)?;
            write_sparse_vec(label_mean, writer)
        }
        TreeNode::Internal {
            classifier,
            children,
        } => {
            writer.write_u8(1)?;
            for centroid in &classifier.centroids {
                write_sparse_vec(centroid, writer)?;
            }
            for child in children {
                write_node(child, writer)?;
            }
            Ok(())
        }
    }
}

fn read_node<R: Read>(
    reader: &mut R,
    k: usize,
    d_y: usize,
    centroid_dim: usize,
) -> Result<TreeNode> {
    match reader.read_u8()? {
        0 => Ok(TreeNode::Leaf {
            label_mean: read_sparse_vec(reader, d_y)?,
        }),
        1 => {
            let mut centroids = Vec::with_capacity(k);
            for _ in 0..k {
                centroids.push(read_sparse_vec(reader, centroid_dim)?);
            }
            let mut children = Vec::with_capacity(k);
            for _ in 0..k {
                children.push(read_node(reader, k, d_y, centroid_dim)?);
            }
            Ok(TreeNode::Internal {
                classifier: NodeClassifier { centroids },
                children,
            })
        }
        tag => Err(Error::Corrupt(format!("unknown node tag {}", tag))),
    }
}

fn write_projection_spec<W: Write>(spec: &ProjectionSpec, writer: &mut W) -> io::Result<()> {
    writer.write_u64::<LittleEndian>(spec.out_dim as u64)?;
    writer.write_u64::<LittleEndian>(spec.seed_index)?;
    writer.write_u64::<LittleEndian>(spec.seed_sign)
}

fn read_projection_spec<R: Read>(reader: &mut R) -> Result<ProjectionSpec> {
    Ok(ProjectionSpec {
        out_dim: reader.read_u64::<LittleEndian>()? as usize,
        seed_index: reader.read_u64::<LittleEndian>()?,
        seed_sign: reader.read_u64::<LittleEndian>()?,
    })
}

/// Encode one tree as the byte block the model file and the gather wire
/// format both carry. This length is the per-tree model size n_t.
pub fn encode_tree_block(tree: &TrainedTree) -> Vec<u8> {
    let mut block = Vec::new();
    block
        .write_u32::<LittleEndian>(tree.tree_index as u32)
        .expect("vec write");
    write_projection_spec(&tree.feature_spec, &mut block).expect("vec write");
    write_projection_spec(&tree.label_spec, &mut block).expect("vec write");
    write_node(&tree.root, &mut block).expect("vec write");
    block
}

/// Decode one tree block (the inverse of [`encode_tree_block`]).
pub fn decode_tree_block(block: &[u8], k: usize, d_y: usize) -> Result<TrainedTree> {
    let mut cursor = Cursor::new(block);
    let tree_index = cursor.read_u32::<LittleEndian>()? as usize;
    let feature_spec = read_projection_spec(&mut cursor)?;
    let label_spec = read_projection_spec(&mut cursor)?;
    let root = read_node(&mut cursor, k, d_y, feature_spec.out_dim)?;
    if cursor.position() != block.len() as u64 {
        return Err(Error::Corrupt(format!(
            "tree block has {} trailing bytes",
            block.len() as u64 - cursor.position()
        )));
    }
    Ok(TrainedTree {
        tree_index,
        feature_spec,
        label_spec,
        root,
    })
}

fn write_config<W: Write>(cfg: &TrainConfig, d_x: usize, d_y: usize, w: &mut W) -> io::Result<()> {
    w.write_u32::<LittleEndian>(cfg.n_trees as u32)?;
    w.write_u32::<LittleEndian>(cfg.k as u32)?;
    w.write_u64::<LittleEndian>(cfg.n_leaf as u64)?;
    w.write_u64::<LittleEndian>(cfg.n_s as u64)?;
    w.write_u64::<LittleEndian>(cfg.proj_dim_x.map_or(0, |d| d as u64))?;
    w.write_u64::<LittleEndian>(cfg.proj_dim_y.map_or(0, |d| d as u64))?;
    w.write_u32::<LittleEndian>(cfg.kmeans_iters as u32)?;
    w.write_u64::<LittleEndian>(cfg.master_seed)?;
    w.write_u64::<LittleEndian>(d_x as u64)?;
    w.write_u64::<LittleEndian>(d_y as u64)?;
    Ok(())
}

fn read_config<R: Read>(r: &mut R) -> Result<(TrainConfig, usize, usize)> {
    let n_trees = r.read_u32::<LittleEndian>()? as usize;
    let k = r.read_u32::<LittleEndian>()? as usize;
    let n_leaf = r.read_u64::<LittleEndian>()? as usize;
    let n_s = r.read_u64::<LittleEndian>()? as usize;
    let proj_dim_x = match r.read_u64::<LittleEndian>()? {
        0 => None,
        d => Some(d as usize),
    };
    let proj_dim_y = match r.read_u64::<LittleEndian>()? {
        0 => None,
        d => Some(d as usize),
    };
    let kmeans_iters = r.read_u32::<LittleEndian>()? as usize;
    let master_seed = r.read_u64::<LittleEndian>()?;
    let d_x = r.read_u64::<LittleEndian>()? as usize;
    let d_y = r.read_u64::<LittleEndian>()? as usize;
    Ok((
        TrainConfig {
            n_trees,
            k,
            n_leaf,
            n_s,
            proj_dim_x,
            proj_dim_y,
            kmeans_iters,
            master_seed,
        },
        d_x,
        d_y,
    ))
}

/// Serialize a model into the chunked `DXMF` container.
pub fn serialize_model<W: Write>(model: &ForestModel, mut writer: W) -> Result<()> {
    writer.write_all(&MODEL_MAGIC)?;
    writer.write_u32::<LittleEndian>(model.format_version)?;
    write_config(&model.config, model.d_x, model.d_y, &mut writer)?;
    writer.write_u32::<LittleEndian>(model.trees.len() as u32)?;
    for tree in &model.trees {
        let block = encode_tree_block(tree);
        writer.write_u64::<LittleEndian>(block.len() as u64)?;
        writer.write_all(&block)?;
    }
    Ok(())
}

fn map_eof(e: io::Error, what: &str) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Truncated(what.to_string())
    } else {
        Error::Io(e)
    }
}

/// Deserialize a model, validating magic, version, block lengths, tree
/// indices, and sparse-vector invariants. Truncation never yields a partial
/// model.
pub fn deserialize_model<R: Read>(mut reader: R) -> Result<ForestModel> {
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|e| map_eof(e, "while reading magic"))?;
    if magic != MODEL_MAGIC {
        return Err(Error::BadMagic {
            expected: MODEL_MAGIC,
            found: magic,
        });
    }
    let version = reader
        .read_u32::<LittleEndian>()
        .map_err(|e| map_eof(e, "while reading version"))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let (config, d_x, d_y) =
        read_config(&mut reader).map_err(|e| truncation_context(e, "while reading config"))?;
    config
        .validate()
        .map_err(|e| Error::Corrupt(e.to_string()))?;
    let tree_count = reader
        .read_u32::<LittleEndian>()
        .map_err(|e| map_eof(e, "while reading tree count"))? as usize;
    if tree_count != config.n_trees {
        return Err(Error::Corrupt(format!(
            "tree count {} does not match configured forest size {}",
            tree_count, config.n_trees
        )));
    }

    let mut trees = Vec::with_capacity(tree_count);
    for i in 0..tree_count {
        let len = reader
            .read_u64::<LittleEndian>()
            .map_err(|e| map_eof(e, "while reading tree block length"))? as usize;
        let mut block = vec![0u8; len];
        reader
            .read_exact(&mut block)
            .map_err(|e| map_eof(e, "inside a tree block"))?;
        let tree = decode_tree_block(&block, config.k, d_y)
            .map_err(|e| truncation_context(e, "inside a tree block"))?;
        if tree.tree_index != i {
            return Err(Error::Corrupt(format!(
                "tree block {} carries index {}",
                i, tree.tree_index
            )));
        }
        trees.push(tree);
    }

    Ok(ForestModel {
        format_version: version,
        config,
        d_x,
        d_y,
        trees,
    })
}

fn truncation_context(e: Error, what: &str) -> Error {
    match e {
        Error::Io(io_err) => map_eof(io_err, what),
        other => other,
    }
}

/// Serialized size in bytes of the whole model.
pub fn model_bytes(model: &ForestModel) -> u64 {
    let mut bytes = Vec::new();
    serialize_model(model, &mut bytes).expect("vec write");
    bytes.len() as u64
}

/// Save a model to a file path, attaching the path to any I/O error.
pub fn save_model<P: AsRef<Path>>(model: &ForestModel, path: P) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    serialize_model(model, BufWriter::new(file))
}

/// Load a model from a file path, attaching the path to any I/O error.
pub fn load_model<P: AsRef<Path>>(path: P) -> Result<ForestModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    deserialize_model(BufReader::new(file))
}
