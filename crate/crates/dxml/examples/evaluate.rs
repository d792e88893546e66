//! Train on one split, evaluate precision@{1,3,5} on the other, and print
//! both the table and the JSON line the CLI's `--json` flag emits.
//!
//! ```bash
//! cargo run --release -p dxml --example evaluate
//! ```

use dxml::eval::evaluate;
use dxml::forest::{model_bytes, train_forest};
use dxml::synth::{clustered_dataset, SynthConfig};
use dxml::tree::TrainConfig;
use std::time::Instant;

fn main() -> dxml::Result<()> {
    let (train, test) = clustered_dataset(&SynthConfig {
        groups: 8,
        train_per_group: 100,
        test_per_group: 25,
        d_x: 96,
        d_y: 40,
        feature_support: 8,
        labels_per_group: 4,
        noise: 0.35,
        seed: 3,
    })?;

    let cfg = TrainConfig {
        n_trees: 30,
        k: 4,
        n_leaf: 10,
        ..TrainConfig::default()
    };
    let started = Instant::now();
    let (model, _, _) = train_forest(&train, &cfg)?;
    let train_seconds = started.elapsed().as_secs_f64();

    let mut report = evaluate(&model, &test, &[1, 3, 5])?;
    report.train_seconds = Some(train_seconds);
    report.model_bytes = Some(model_bytes(&model));

    print!("{}", report);
    println!("{}", report.to_json_line());
    Ok(())
}
