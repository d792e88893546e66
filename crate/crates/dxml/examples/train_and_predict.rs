//! Train a small forest on clustered synthetic data and rank labels for a
//! few held-out instances.
//!
//! ```bash
//! cargo run --release -p dxml --example train_and_predict
//! ```

use dxml::forest::{model_bytes, predict_forest, train_forest};
use dxml::synth::{clustered_dataset, SynthConfig};
use dxml::tree::TrainConfig;

fn main() -> dxml::Result<()> {
    let (train, test) = clustered_dataset(&SynthConfig {
        groups: 6,
        train_per_group: 80,
        test_per_group: 3,
        d_x: 64,
        d_y: 24,
        feature_support: 6,
        labels_per_group: 3,
        noise: 0.3,
        seed: 7,
    })?;

    let cfg = TrainConfig {
        n_trees: 20,
        k: 4,
        n_leaf: 8,
        ..TrainConfig::default()
    };
    let (model, stats, _) = train_forest(&train, &cfg)?;

    let nodes: usize = stats.iter().map(|s| s.records.len()).sum();
    println!(
        "trained {} trees, {} nodes total, serialized size {} bytes",
        model.trees.len(),
        nodes,
        model_bytes(&model)
    );

    for i in 0..test.n().min(6) {
        let ranked = predict_forest(&model, test.features.row(i), 4);
        let truth: Vec<u32> = test.labels.row(i).iter().map(|(c, _)| c).collect();
        let shown: Vec<String> = ranked
            .iter()
            .map(|(label, score)| format!("{}:{:.2}", label, score))
            .collect();
        println!(
            "instance {:>2}  true labels {:?}  predicted {}",
            i,
            truth,
            shown.join(" ")
        );
    }
    Ok(())
}
