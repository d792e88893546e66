//! Distributed training on the loopback transport: three workers train
//! disjoint slices of the forest, the master gathers one message per worker
//! and assembles a forest byte-identical to a single-process run.
//!
//! ```bash
//! cargo run --release -p dxml --example distributed_gather
//! ```
//!
//! The same flow runs across machines with the `dxml worker` and
//! `dxml master` subcommands and a `rank host:port` roster file.

use dxml::distributed::{
    comm_report, loopback_network, run_master, run_worker, ClusterConfig, Role,
};
use dxml::forest::{serialize_model, train_forest};
use dxml::synth::{clustered_dataset, SynthConfig};
use dxml::tree::TrainConfig;

fn main() -> dxml::Result<()> {
    let (train, _) = clustered_dataset(&SynthConfig {
        groups: 6,
        train_per_group: 60,
        test_per_group: 1,
        d_x: 64,
        d_y: 24,
        feature_support: 6,
        labels_per_group: 3,
        noise: 0.3,
        seed: 11,
    })?;
    let cfg = TrainConfig {
        n_trees: 9,
        k: 3,
        n_leaf: 8,
        ..TrainConfig::default()
    };

    let workers = 3;
    let mut network = loopback_network(workers + 1);
    let mut master_transport = network.remove(0);

    let (model, stats) = std::thread::scope(|scope| {
        for (slot, mut transport) in network.into_iter().enumerate() {
            let cluster = ClusterConfig {
                workers,
                role: Role::Worker,
                rank: slot + 1,
                roster: Vec::new(),
            };
            let dataset = &train;
            let config = &cfg;
            scope.spawn(move || {
                run_worker(dataset, config, &cluster, &mut transport).expect("worker")
            });
        }
        let cluster = ClusterConfig {
            workers,
            role: Role::Master,
            rank: 0,
            roster: Vec::new(),
        };
        run_master(&cfg, &cluster, &mut master_transport).expect("master")
    });

    let cluster = ClusterConfig {
        workers,
        role: Role::Master,
        rank: 0,
        roster: Vec::new(),
    };
    let report = comm_report(&stats, &cluster, &model);
    print!("{}", report);
    report
        .validate()
        .expect("exact message and byte accounting");

    // The gather changes where trees live, not what they are.
    let (reference, _, _) = train_forest(&train, &cfg)?;
    let mut gathered_bytes = Vec::new();
    let mut reference_bytes = Vec::new();
    serialize_model(&model, &mut gathered_bytes)?;
    serialize_model(&reference, &mut reference_bytes)?;
    println!(
        "gathered forest byte-identical to single-process run: {}",
        if gathered_bytes == reference_bytes {
            "yes"
        } else {
            "NO"
        }
    );
    Ok(())
}
