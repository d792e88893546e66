//! Extreme multilabel classification with a forest of k-ary instance trees.
//!
//! Training recursively partitions instances: at each node a sample of the
//! instances has its labels hash-projected into a low-dimensional space and
//! clustered with spherical k-means, and the node keeps one routing centroid
//! per cluster computed from the matching projected feature rows. Prediction
//! routes a feature vector from root to leaf in every tree and averages the
//! mean label vectors stored in the reached leaves. Forests can be trained on
//! one machine or by a set of workers that each train a slice of the trees
//! and send the serialized models to a master over a message-passing
//! transport.
//!
//! Start with the `examples/` directory, one runnable example per capability:
//!
//! ```bash
//! cargo run --release -p dxml --example train_and_predict
//! cargo run --release -p dxml --example dataset_io
//! cargo run --release -p dxml --example projection
//! cargo run --release -p dxml --example clustering
//! cargo run --release -p dxml --example evaluate
//! cargo run --release -p dxml --example work_span
//! cargo run --release -p dxml --example distributed_gather
//! ```
//!
//! The same capabilities are reachable from the thin `dxml` binary
//! (`train`, `predict`, `eval`, `bench`, `worker`, `master`).

pub mod cli;
pub mod clustering;
pub mod data;
pub mod distributed;
pub mod error;
pub mod eval;
pub mod forest;
pub mod projection;
pub mod sparse;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
pub use forest::ForestModel;
pub use sparse::{Dataset, SparseMatrix, SparseVec};
pub use tree::TrainConfig;
