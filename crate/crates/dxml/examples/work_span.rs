//! Work-span instrumentation: per-tree total work T1, critical-path work
//! T_inf, and the parallelism ratio T1/T_inf, in the per-node work units
//! sampled_rows x k x (kmeans_iterations x label_nnz + feature_nnz).
//!
//! ```bash
//! cargo run --release -p dxml --example work_span
//! ```

use dxml::forest::{train_forest, work_span_report};
use dxml::synth::{clustered_dataset, SynthConfig};
use dxml::tree::TrainConfig;

fn main() -> dxml::Result<()> {
    let (train, _) = clustered_dataset(&SynthConfig {
        groups: 16,
        train_per_group: 60,
        test_per_group: 1,
        d_x: 128,
        d_y: 64,
        feature_support: 7,
        labels_per_group: 4,
        noise: 0.4,
        seed: 13,
    })?;

    let cfg = TrainConfig {
        n_trees: 5,
        k: 4,
        n_leaf: 20,
        ..TrainConfig::default()
    };
    let (_, stats, _) = train_forest(&train, &cfg)?;

    println!("tree  nodes  leaves  depth          T1       T_inf  parallelism");
    for (i, tree_stats) in stats.iter().enumerate() {
        let span = work_span_report(tree_stats);
        println!(
            "{:>4}  {:>5}  {:>6}  {:>5}  {:>10.0}  {:>10.0}  {:>11.2}",
            i,
            tree_stats.records.len(),
            tree_stats.leaf_count,
            span.depth,
            span.t1,
            span.t_inf,
            span.parallelism
        );
        // Strictly k-ary: internal nodes and leaves satisfy the node-count
        // identity m_internal = (leaves - 1) / (k - 1).
        assert_eq!(
            tree_stats.internal_count,
            (tree_stats.leaf_count - 1) / (cfg.k - 1)
        );
    }
    println!(
        "\nmean instances per node (tree 0): {:.1}",
        stats[0].mean_instances()
    );
    println!(
        "projection work (tree 0): {} hashed entries",
        stats[0].projection_ops
    );
    Ok(())
}
