//! Training and prediction for one k-ary instance tree.
//!
//! A node stops and becomes a leaf (storing the mean label vector of its
//! instances) when it is small enough or its instances are indistinguishable;
//! otherwise a sample of its instances is projected, the projected labels are
//! clustered, and one routing centroid per cluster is computed from the
//! matching projected feature rows. All instances are then routed to the
//! nearest centroid and the children are trained recursively. Projection
//! seeds are fixed per tree, so feature rows are projected once per tree and
//! reused at every node.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clustering::{spherical_kmeans_rows, ClusterAssignment, KMeansConfig};
use crate::projection::{
    chain_seed, derive_tree_seeds, project_row, tree_rng_seed, ProjectionSpec,
};
use crate::sparse::{l2_normalize, mean_of_rows, Dataset, SparseVec};

/// Default cap on the projected feature/label dimensions.
pub const DEFAULT_PROJECTION_CAP: usize = 10_000;

/// Forest-wide training configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    /// Number of trees in the forest (m_F).
    pub n_trees: usize,
    /// Branching factor of every internal node.
    pub k: usize,
    /// A node with fewer instances than this becomes a leaf.
    pub n_leaf: usize,
    /// Per-node sample cap for classifier training.
    pub n_s: usize,
    /// Projected feature dimension; `None` means `min(d_x, 10000)`.
    pub proj_dim_x: Option<usize>,
    /// Projected label dimension; `None` means `min(d_y, 10000)`.
    pub proj_dim_y: Option<usize>,
    /// Iteration cap for the per-node spherical k-means.
    pub kmeans_iters: usize,
    /// Master seed; everything else derives from it.
    pub master_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_trees: 50,
            k: 10,
            n_leaf: 10,
            n_s: 20_000,
            proj_dim_x: None,
            proj_dim_y: None,
            kmeans_iters: 20,
            master_seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let fail = |msg: String| Err(crate::Error::InvalidConfig(msg));
        if self.n_trees < 1 {
            return fail("n_trees must be at least 1".into());
        }
        if self.k < 2 {
            return fail(format!(
                "branching factor k must be at least 2, got {}",
                self.k
            ));
        }
        if self.n_leaf < 1 {
            return fail("n_leaf must be at least 1".into());
        }
        if self.n_s < self.k {
            return fail(format!(
                "sample cap n_s ({}) must be at least k ({})",
                self.n_s, self.k
            ));
        }
        if self.kmeans_iters < 1 {
            return fail("kmeans_iters must be at least 1".into());
        }
        if self.proj_dim_x == Some(0) || self.proj_dim_y == Some(0) {
            return fail("projection dimensions must be at least 1".into());
        }
        Ok(())
    }

    /// Effective projection dimensions for a dataset of shape (d_x, d_y).
    pub fn resolved_proj_dims(&self, d_x: usize, d_y: usize) -> (usize, usize) {
        (
            self.proj_dim_x
                .unwrap_or_else(|| d_x.min(DEFAULT_PROJECTION_CAP)),
            self.proj_dim_y
                .unwrap_or_else(|| d_y.min(DEFAULT_PROJECTION_CAP)),
        )
    }

    /// Projection specs for one tree of this configuration.
    pub fn tree_projection_specs(
        &self,
        tree_index: usize,
        d_x: usize,
        d_y: usize,
    ) -> (ProjectionSpec, ProjectionSpec) {
        let (px, py) = self.resolved_proj_dims(d_x, d_y);
        derive_tree_seeds(self.master_seed, tree_index, px, py)
    }
}

/// One routing classifier: k centroid rows in projected feature space, each
/// unit-normalized or empty.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeClassifier {
    pub centroids: Vec<SparseVec>,
}

impl NodeClassifier {
    pub fn all_empty(&self) -> bool {
        self.centroids.iter().all(|c| c.is_empty())
    }
}

/// A trained tree node: internal nodes hold the classifier and exactly k
/// children; leaves hold the mean label vector of their instances.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        classifier: NodeClassifier,
        children: Vec<TreeNode>,
    },
    Leaf {
        label_mean: SparseVec,
    },
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => children.iter().map(|c| c.leaf_count()).sum(),
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { children, .. } => {
                1 + children.iter().map(|c| c.internal_count()).sum::<usize>()
            }
        }
    }

    /// Longest root-to-leaf edge count.
    pub fn height(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { children, .. } => {
                1 + children.iter().map(|c| c.height()).max().unwrap_or(0)
            }
        }
    }
}

/// Instrumentation for one trained node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub depth: usize,
    /// Instances reaching the node (n_v).
    pub instances: usize,
    /// Rows actually sampled for classifier training (min(n_v, n_s)).
    pub sampled: usize,
    pub kmeans_iterations: usize,
    /// Estimated work units: sampled × k × (iterations × avg projected label
    /// nnz + avg projected feature nnz) for internal nodes; the label-mean
    /// accumulation size for leaves.
    pub cost: f64,
    /// Sparse entries actually touched while training the node.
    pub observed_ops: u64,
    pub is_leaf: bool,
}

/// Per-tree instrumentation: node records in pre-order plus aggregate work
/// and critical-path work in the same units as [`NodeRecord::cost`].
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStats {
    pub records: Vec<NodeRecord>,
    pub internal_count: usize,
    pub leaf_count: usize,
    /// Longest root-to-leaf edge count.
    pub depth: usize,
    /// Sum of node costs (the work T1).
    pub total_work: f64,
    /// Heaviest root-to-leaf cost sum (the span T∞).
    pub critical_path_work: f64,
    /// Entries hashed by the once-per-tree row projection.
    pub projection_ops: u64,
}

impl TreeStats {
    /// Mean instances per node, over internal nodes and leaves alike.
    pub fn mean_instances(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.instances as f64).sum::<f64>() / self.records.len() as f64
    }
}

/// A tree plus the projection specs it routes and predicts with.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedTree {
    pub tree_index: usize,
    pub feature_spec: ProjectionSpec,
    pub label_spec: ProjectionSpec,
    pub root: TreeNode,
}

/// True when the node should become a leaf: too few instances, or all
/// feature rows identical, or all label rows identical. Row identity is
/// exact equality of the sparse entry lists.
pub fn test_stop_condition(
    features: &[&SparseVec],
    labels: &[&SparseVec],
    cfg: &TrainConfig,
) -> bool {
    debug_assert!(!features.is_empty());
    debug_assert_eq!(features.len(), labels.len());
    features.len() < cfg.n_leaf || all_rows_equal(features) || all_rows_equal(labels)
}

fn all_rows_equal(rows: &[&SparseVec]) -> bool {
    rows.windows(2).all(|w| w[0].entries() == w[1].entries())
}

/// Deterministic partial Fisher-Yates: the first `m` elements of a seeded
/// permutation of `0..n`.
fn sample_positions(n: usize, m: usize, rng: &mut impl Rng) -> Vec<usize> {
    debug_assert!(m <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for j in 0..m {
        let r = rng.random_range(j..n);
        pool.swap(j, r);
    }
    pool.truncate(m);
    pool
}

/// Cluster projected label rows and compute one unit centroid per cluster
/// from the matching projected feature rows. Clusters left empty by a
/// degenerate clustering yield empty classifier rows.
fn classifier_from_projected(
    proj_features: &[&SparseVec],
    proj_labels: &[&SparseVec],
    k: usize,
    kmeans_iters: usize,
    kmeans_seed: u64,
    entry_ops: &mut u64,
) -> (NodeClassifier, ClusterAssignment) {
    let assignment = spherical_kmeans_rows(
        proj_labels,
        &KMeansConfig {
            k,
            max_iters: kmeans_iters,
            seed: kmeans_seed,
        },
    );
    *entry_ops += assignment.entry_ops;

    let dim = proj_features[0].dim();
    let mut centroids = Vec::with_capacity(k);
    for cluster in 0..k {
        let members: Vec<&SparseVec> = assignment
            .labels
            .iter()
            .enumerate()
            .filter(|&(_, &label)| label == cluster)
            .map(|(i, _)| proj_features[i])
            .collect();
        if members.is_empty() {
            centroids.push(SparseVec::empty(dim));
        } else {
            *entry_ops += members.iter().map(|r| r.nnz() as u64).sum::<u64>();
            let mean = mean_of_rows(members.iter().copied(), dim);
            *entry_ops += mean.nnz() as u64;
            centroids.push(l2_normalize(&mean));
        }
    }
    (NodeClassifier { centroids }, assignment)
}

/// Train a node classifier from original-space rows: sample up to `n_s`
/// rows, project them through the tree's specs, cluster the projected
/// labels, and build the centroid rows. Returns the classifier, the sampled
/// cluster assignment, and the sampled positions into `features`.
pub fn train_node_classifier(
    features: &[&SparseVec],
    labels: &[&SparseVec],
    cfg: &TrainConfig,
    feature_spec: &ProjectionSpec,
    label_spec: &ProjectionSpec,
    node_seed: u64,
) -> (NodeClassifier, ClusterAssignment, Vec<usize>) {
    assert_eq!(features.len(), labels.len());
    assert!(!features.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(chain_seed(node_seed, 0));
    let m = features.len().min(cfg.n_s);
    let sample = sample_positions(features.len(), m, &mut rng);

    let proj_features: Vec<SparseVec> = sample
        .iter()
        .map(|&p| project_row(features[p], feature_spec))
        .collect();
    let proj_labels: Vec<SparseVec> = sample
        .iter()
        .map(|&p| project_row(labels[p], label_spec))
        .collect();
    let pf: Vec<&SparseVec> = proj_features.iter().collect();
    let pl: Vec<&SparseVec> = proj_labels.iter().collect();

    let mut entry_ops = 0u64;
    let (classifier, assignment) = classifier_from_projected(
        &pf,
        &pl,
        cfg.k,
        cfg.kmeans_iters,
        chain_seed(node_seed, 1),
        &mut entry_ops,
    );
    (classifier, assignment, sample)
}

/// Route rows that are already in projected feature space. Centroids are
/// unit or empty, so the cosine argmax equals the dot-product argmax; ties
/// and all-zero rows fall to the lowest index.
fn route_projected(row: &SparseVec, centroids: &[SparseVec], entry_ops: &mut u64) -> usize {
    let mut best = 0usize;
    let mut best_sim = f64::NEG_INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        *entry_ops += (row.nnz() + c.nnz()) as u64;
        let sim = row.dot(c);
        if sim > best_sim {
            best_sim = sim;
            best = i;
        }
    }
    best
}

fn split_projected(
    classifier: &NodeClassifier,
    proj_rows: impl Iterator<Item = usize>,
    lookup: impl Fn(usize) -> usize,
    projected: &[SparseVec],
    entry_ops: &mut u64,
) -> Vec<Vec<usize>> {
    let dim = classifier.centroids[0].dim();
    let dense = crate::clustering::DenseCentroids::new(&classifier.centroids, dim, entry_ops);
    let mut sims = Vec::new();
    let mut subsets: Vec<Vec<usize>> = vec![Vec::new(); classifier.centroids.len()];
    for pos in proj_rows {
        let child = dense.route(&projected[lookup(pos)], &mut sims, entry_ops);
        subsets[child].push(pos);
    }
    subsets
}

/// Partition rows by nearest classifier centroid after projecting them
/// through the tree's feature spec. Returns `None` when every centroid is
/// empty, which signals the caller to demote the node to a leaf.
pub fn split(
    classifier: &NodeClassifier,
    features: &[&SparseVec],
    feature_spec: &ProjectionSpec,
) -> Option<Vec<Vec<usize>>> {
    if classifier.all_empty() {
        return None;
    }
    let mut subsets: Vec<Vec<usize>> = vec![Vec::new(); classifier.centroids.len()];
    let mut ops = 0u64;
    for (pos, row) in features.iter().enumerate() {
        let projected = project_row(row, feature_spec);
        subsets[route_projected(&projected, &classifier.centroids, &mut ops)].push(pos);
    }
    Some(subsets)
}

struct TreeTrainer<'a> {
    dataset: &'a Dataset,
    cfg: &'a TrainConfig,
    proj_features: Vec<SparseVec>,
    proj_labels: Vec<SparseVec>,
}

struct Subtree {
    node: TreeNode,
    records: Vec<NodeRecord>,
    internal_count: usize,
    leaf_count: usize,
    height: usize,
    total_work: f64,
    critical_path_work: f64,
}

const PARALLEL_SPLIT_THRESHOLD: usize = 256;

impl<'a> TreeTrainer<'a> {
    fn leaf(&self, label_mean: SparseVec, depth: usize, instances: usize, cost: f64) -> Subtree {
        Subtree {
            node: TreeNode::Leaf { label_mean },
            records: vec![NodeRecord {
                depth,
                instances,
                sampled: 0,
                kmeans_iterations: 0,
                cost,
                observed_ops: cost as u64,
                is_leaf: true,
            }],
            internal_count: 0,
            leaf_count: 1,
            height: 0,
            total_work: cost,
            critical_path_work: cost,
        }
    }

    fn mean_label(&self, indices: &[u32]) -> (SparseVec, f64) {
        let rows = indices.iter().map(|&i| self.dataset.labels.row(i as usize));
        let nnz_total: usize = rows.clone().map(|r| r.nnz()).sum();
        (mean_of_rows(rows, self.dataset.d_y()), nnz_total as f64)
    }

    fn train_node(&self, indices: &[u32], node_seed: u64, depth: usize) -> Subtree {
        debug_assert!(!indices.is_empty());
        let features: Vec<&SparseVec> = indices
            .iter()
            .map(|&i| self.dataset.features.row(i as usize))
            .collect();
        let labels: Vec<&SparseVec> = indices
            .iter()
            .map(|&i| self.dataset.labels.row(i as usize))
            .collect();

        if test_stop_condition(&features, &labels, self.cfg) {
            let (mean, cost) = self.mean_label(indices);
            return self.leaf(mean, depth, indices.len(), cost);
        }

        let mut entry_ops = 0u64;
        let mut rng = ChaCha8Rng::seed_from_u64(chain_seed(node_seed, 0));
        let m = indices.len().min(self.cfg.n_s);
        let sample = sample_positions(indices.len(), m, &mut rng);

        let pf: Vec<&SparseVec> = sample
            .iter()
            .map(|&p| &self.proj_features[indices[p] as usize])
            .collect();
        let pl: Vec<&SparseVec> = sample
            .iter()
            .map(|&p| &self.proj_labels[indices[p] as usize])
            .collect();
        let (classifier, assignment) = classifier_from_projected(
            &pf,
            &pl,
            self.cfg.k,
            self.cfg.kmeans_iters,
            chain_seed(node_seed, 1),
            &mut entry_ops,
        );

        // Lemma-style per-node cost estimate from what the classifier saw.
        let s_y_bar = pl.iter().map(|r| r.nnz() as f64).sum::<f64>() / m as f64;
        let s_x_bar = pf.iter().map(|r| r.nnz() as f64).sum::<f64>() / m as f64;
        let cost =
            m as f64 * self.cfg.k as f64 * (assignment.iterations as f64 * s_y_bar + s_x_bar);

        if classifier.all_empty() {
            let (mean, leaf_cost) = self.mean_label(indices);
            return self.leaf(mean, depth, indices.len(), leaf_cost);
        }

        let subsets = split_projected(
            &classifier,
            0..indices.len(),
            |pos| indices[pos] as usize,
            &self.proj_features,
            &mut entry_ops,
        );
        let non_empty = subsets.iter().filter(|s| !s.is_empty()).count();
        if non_empty <= 1 {
            // Degenerate split: no progress, keep the node as a leaf.
            let (mean, leaf_cost) = self.mean_label(indices);
            return self.leaf(mean, depth, indices.len(), leaf_cost);
        }

        let parent_mean = if subsets.iter().any(|s| s.is_empty()) {
            Some(self.mean_label(indices).0)
        } else {
            None
        };

        let child_indices: Vec<Vec<u32>> = subsets
            .into_iter()
            .map(|subset| subset.into_iter().map(|pos| indices[pos]).collect())
            .collect();

        let train_child = |(i, child): (usize, &Vec<u32>)| -> Subtree {
            if child.is_empty() {
                let mean = parent_mean.clone().expect("parent mean for empty child");
                self.leaf(mean, depth + 1, 0, 0.0)
            } else {
                self.train_node(child, chain_seed(node_seed, 2 + i as u64), depth + 1)
            }
        };
        let children: Vec<Subtree> = if indices.len() >= PARALLEL_SPLIT_THRESHOLD {
            use rayon::prelude::*;
            child_indices
                .par_iter()
                .enumerate()
                .map(train_child)
                .collect()
        } else {
            child_indices.iter().enumerate().map(train_child).collect()
        };

        let mut records = vec![NodeRecord {
            depth,
            instances: indices.len(),
            sampled: m,
            kmeans_iterations: assignment.iterations,
            cost,
            observed_ops: entry_ops,
            is_leaf: false,
        }];
        let mut internal_count = 1;
        let mut leaf_count = 0;
        let mut height = 0;
        let mut total_work = cost;
        let mut critical_child = 0.0f64;
        let mut nodes = Vec::with_capacity(children.len());
        for child in children {
            records.extend(child.records);
            internal_count += child.internal_count;
            leaf_count += child.leaf_count;
            height = height.max(child.height + 1);
            total_work += child.total_work;
            critical_child = critical_child.max(child.critical_path_work);
            nodes.push(child.node);
        }

        Subtree {
            node: TreeNode::Internal {
                classifier,
                children: nodes,
            },
            records,
            internal_count,
            leaf_count,
            height,
            total_work,
            critical_path_work: cost + critical_child,
        }
    }
}

/// Train one tree over the given instance indices. All randomness derives
/// from `(cfg.master_seed, tree_index)` and per-node chained seeds, so the
/// result does not depend on thread scheduling.
pub fn train_tree(
    dataset: &Dataset,
    indices: &[u32],
    cfg: &TrainConfig,
    tree_index: usize,
) -> (TrainedTree, TreeStats) {
    assert!(!indices.is_empty(), "training a tree needs instances");
    let (feature_spec, label_spec) =
        cfg.tree_projection_specs(tree_index, dataset.d_x(), dataset.d_y());

    let mut projection_ops = 0u64;
    let mut proj_features: Vec<SparseVec> =
        vec![SparseVec::empty(feature_spec.out_dim); dataset.n()];
    let mut proj_labels: Vec<SparseVec> = vec![SparseVec::empty(label_spec.out_dim); dataset.n()];
    for &i in indices {
        let i = i as usize;
        projection_ops += (dataset.features.row(i).nnz() + dataset.labels.row(i).nnz()) as u64;
        proj_features[i] = project_row(dataset.features.row(i), &feature_spec);
        proj_labels[i] = project_row(dataset.labels.row(i), &label_spec);
    }

    let trainer = TreeTrainer {
        dataset,
        cfg,
        proj_features,
        proj_labels,
    };
    let subtree = trainer.train_node(indices, tree_rng_seed(cfg.master_seed, tree_index), 0);

    let stats = TreeStats {
        records: subtree.records,
        internal_count: subtree.internal_count,
        leaf_count: subtree.leaf_count,
        depth: subtree.height,
        total_work: subtree.total_work,
        critical_path_work: subtree.critical_path_work,
        projection_ops,
    };
    (
        TrainedTree {
            tree_index,
            feature_spec,
            label_spec,
            root: subtree.node,
        },
        stats,
    )
}

/// Predict with one tree: project the feature row once, route from root to
/// leaf, and return the reached leaf's mean label vector.
pub fn predict_tree<'a>(tree: &'a TrainedTree, features: &SparseVec) -> &'a SparseVec {
    let projected = project_row(features, &tree.feature_spec);
    let mut node = &tree.root;
    let mut ops = 0u64;
    loop {
        match node {
            TreeNode::Leaf { label_mean } => return label_mean,
            TreeNode::Internal {
                classifier,
                children,
            } => {
                let child = route_projected(&projected, &classifier.centroids, &mut ops);
                node = &children[child];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::assign_nearest;
    use crate::sparse::{mean_rows, SparseMatrix};

    fn sv(dim: usize, entries: &[(u32, f64)]) -> SparseVec {
        SparseVec::new(dim, entries.to_vec()).unwrap()
    }

    fn basis(dim: usize, i: u32) -> SparseVec {
        sv(dim, &[(i, 1.0)])
    }

    /// Two well-separated groups. Each group's features share a four-axis
    /// signature (axes 0..4 vs 4..8) with per-instance jitter, so projected
    /// feature rows stay near-parallel within a group; labels are {0,1} vs
    /// {6,7}.
    fn two_group_dataset(per_group: usize) -> Dataset {
        let d_x = 8;
        let d_y = 8;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for group in 0..2u32 {
            for i in 0..per_group {
                let entries: Vec<(u32, f64)> = (0..4)
                    .map(|a| {
                        let axis = group * 4 + a;
                        (axis, 1.0 + 0.05 * ((i as u32 + a) % 5) as f64)
                    })
                    .collect();
                features.push(sv(d_x, &entries));
                let label_base = group * 6;
                labels.push(sv(d_y, &[(label_base, 1.0), (label_base + 1, 1.0)]));
            }
        }
        Dataset::new(
            SparseMatrix::new(d_x, features).unwrap(),
            SparseMatrix::new(d_y, labels).unwrap(),
        )
        .unwrap()
    }

    fn cfg_for_tests() -> TrainConfig {
        TrainConfig {
            n_trees: 1,
            k: 2,
            n_leaf: 25,
            n_s: 20_000,
            proj_dim_x: Some(8),
            proj_dim_y: Some(8),
            kmeans_iters: 10,
            master_seed: 42,
        }
    }

    #[test]
    fn stop_condition_small_node() {
        let cfg = TrainConfig {
            n_leaf: 10,
            ..TrainConfig::default()
        };
        let f = [basis(4, 0), basis(4, 1), basis(4, 2)];
        let l = [basis(4, 0), basis(4, 1), basis(4, 2)];
        let fr: Vec<&SparseVec> = f.iter().collect();
        let lr: Vec<&SparseVec> = l.iter().collect();
        assert!(test_stop_condition(&fr, &lr, &cfg));
    }

    #[test]
    fn stop_condition_large_distinct_node() {
        let cfg = TrainConfig {
            n_leaf: 10,
            ..TrainConfig::default()
        };
        let f: Vec<SparseVec> = (0..100).map(|i| basis(100, i)).collect();
        let l: Vec<SparseVec> = (0..100).map(|i| basis(100, 99 - i)).collect();
        let fr: Vec<&SparseVec> = f.iter().collect();
        let lr: Vec<&SparseVec> = l.iter().collect();
        assert!(!test_stop_condition(&fr, &lr, &cfg));
    }

    #[test]
    fn stop_condition_identical_labels() {
        let cfg = TrainConfig {
            n_leaf: 10,
            ..TrainConfig::default()
        };
        let f: Vec<SparseVec> = (0..500).map(|i| basis(500, i)).collect();
        let l: Vec<SparseVec> = (0..500).map(|_| basis(4, 2)).collect();
        let fr: Vec<&SparseVec> = f.iter().collect();
        let lr: Vec<&SparseVec> = l.iter().collect();
        assert!(test_stop_condition(&fr, &lr, &cfg));
    }

    #[test]
    fn classifier_training_uses_all_rows_when_below_cap() {
        let ds = two_group_dataset(3);
        let cfg = cfg_for_tests();
        let (fspec, lspec) = cfg.tree_projection_specs(0, ds.d_x(), ds.d_y());
        let features: Vec<&SparseVec> = ds.features.rows().iter().collect();
        let labels: Vec<&SparseVec> = ds.labels.rows().iter().collect();
        let (_, assignment, sample) =
            train_node_classifier(&features, &labels, &cfg, &fspec, &lspec, 7);
        assert_eq!(sample.len(), 6);
        let mut sorted = sample.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(assignment.labels.len(), 6);
    }

    #[test]
    fn classifier_on_two_orthogonal_instances() {
        // Two instances whose labels project to orthogonal vectors: each
        // cluster holds one instance and each classifier row is the
        // normalized projected feature row of that instance.
        let ds = two_group_dataset(1);
        let cfg = cfg_for_tests();
        let (fspec, lspec) = cfg.tree_projection_specs(0, ds.d_x(), ds.d_y());
        let pl0 = project_row(ds.labels.row(0), &lspec);
        let pl1 = project_row(ds.labels.row(1), &lspec);
        assert_eq!(pl0.dot(&pl1), 0.0, "fixture needs orthogonal projections");

        let features: Vec<&SparseVec> = ds.features.rows().iter().collect();
        let labels: Vec<&SparseVec> = ds.labels.rows().iter().collect();
        let (classifier, assignment, sample) =
            train_node_classifier(&features, &labels, &cfg, &fspec, &lspec, 7);
        assert_ne!(assignment.labels[0], assignment.labels[1]);
        for (slot, &pos) in sample.iter().enumerate() {
            let cluster = assignment.labels[slot];
            let expected = l2_normalize(&project_row(ds.features.row(pos), &fspec));
            assert_eq!(classifier.centroids[cluster], expected);
        }
    }

    #[test]
    fn split_routes_every_instance_and_matches_assign_nearest() {
        let ds = two_group_dataset(10);
        let cfg = cfg_for_tests();
        let (fspec, lspec) = cfg.tree_projection_specs(0, ds.d_x(), ds.d_y());
        let features: Vec<&SparseVec> = ds.features.rows().iter().collect();
        let labels: Vec<&SparseVec> = ds.labels.rows().iter().collect();
        let (classifier, _, _) = train_node_classifier(&features, &labels, &cfg, &fspec, &lspec, 3);
        let subsets = split(&classifier, &features, &fspec).expect("non-empty classifier");

        let total: usize = subsets.iter().map(|s| s.len()).sum();
        assert_eq!(total, ds.n());
        let mut seen = vec![false; ds.n()];
        for (child, subset) in subsets.iter().enumerate() {
            for &pos in subset {
                assert!(!seen[pos], "instance routed twice");
                seen[pos] = true;
                let projected = project_row(features[pos], &fspec);
                assert_eq!(assign_nearest(&projected, &classifier.centroids), child);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn split_hand_trace() {
        // Centroids e0, e1; rows already aligned with e0, e0, e1.
        let classifier = NodeClassifier {
            centroids: vec![basis(2, 0), basis(2, 1)],
        };
        let projected = vec![
            sv(2, &[(0, 2.0)]),
            sv(2, &[(0, 0.5), (1, 0.1)]),
            sv(2, &[(1, 1.0)]),
        ];
        let mut ops = 0;
        let subsets = split_projected(&classifier, 0..3, |p| p, &projected, &mut ops);
        assert_eq!(subsets, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn split_all_empty_signals_demotion() {
        let classifier = NodeClassifier {
            centroids: vec![SparseVec::empty(4), SparseVec::empty(4)],
        };
        let row = basis(4, 0);
        let features: Vec<&SparseVec> = vec![&row];
        let spec = ProjectionSpec {
            out_dim: 4,
            seed_index: 1,
            seed_sign: 2,
        };
        assert!(split(&classifier, &features, &spec).is_none());
    }

    #[test]
    fn single_instance_trains_to_single_leaf() {
        let ds = two_group_dataset(1);
        let cfg = cfg_for_tests();
        let (tree, stats) = train_tree(&ds, &[0], &cfg, 0);
        match &tree.root {
            TreeNode::Leaf { label_mean } => assert_eq!(label_mean, ds.labels.row(0)),
            other => panic!("expected leaf, got {:?}", other),
        }
        assert_eq!(stats.leaf_count, 1);
        assert_eq!(stats.internal_count, 0);
        assert_eq!(stats.depth, 0);
    }

    #[test]
    fn identical_labels_train_to_root_leaf() {
        let d_y = 4;
        let features: Vec<SparseVec> = (0..50).map(|i| basis(50, i)).collect();
        let labels: Vec<SparseVec> = (0..50).map(|_| sv(d_y, &[(1, 1.0), (3, 1.0)])).collect();
        let ds = Dataset::new(
            SparseMatrix::new(50, features).unwrap(),
            SparseMatrix::new(d_y, labels).unwrap(),
        )
        .unwrap();
        let cfg = TrainConfig {
            n_leaf: 5,
            k: 2,
            ..TrainConfig::default()
        };
        let indices: Vec<u32> = (0..50).collect();
        let (tree, _) = train_tree(&ds, &indices, &cfg, 0);
        assert!(tree.root.is_leaf());
    }

    #[test]
    fn two_group_fixture_trains_depth_one_tree_with_group_means() {
        let ds = two_group_dataset(20);
        let cfg = cfg_for_tests();
        let indices: Vec<u32> = (0..40).collect();
        let (tree, stats) = train_tree(&ds, &indices, &cfg, 0);

        assert_eq!(stats.depth, 1, "expected a single split");
        assert_eq!(stats.internal_count, 1);
        assert_eq!(stats.leaf_count, 2);

        let group0: Vec<usize> = (0..20).collect();
        let group1: Vec<usize> = (20..40).collect();
        let mean0 = mean_rows(&ds.labels, &group0).unwrap();
        let mean1 = mean_rows(&ds.labels, &group1).unwrap();

        match &tree.root {
            TreeNode::Internal { children, .. } => {
                let leaf_means: Vec<&SparseVec> = children
                    .iter()
                    .map(|c| match c {
                        TreeNode::Leaf { label_mean } => label_mean,
                        _ => panic!("expected leaves at depth 1"),
                    })
                    .collect();
                assert!(
                    (leaf_means[0] == &mean0 && leaf_means[1] == &mean1)
                        || (leaf_means[0] == &mean1 && leaf_means[1] == &mean0),
                    "leaf means must be the two group means"
                );
            }
            _ => panic!("expected internal root"),
        }

        // Routing a training instance reaches its group's mean.
        let predicted = predict_tree(&tree, ds.features.row(0));
        assert_eq!(predicted, &mean0);
        let predicted = predict_tree(&tree, ds.features.row(25));
        assert_eq!(predicted, &mean1);
    }

    #[test]
    fn single_leaf_tree_predicts_constantly() {
        let ds = two_group_dataset(1);
        let cfg = cfg_for_tests();
        let (tree, _) = train_tree(&ds, &[1], &cfg, 0);
        let y = predict_tree(&tree, ds.features.row(0));
        assert_eq!(y, ds.labels.row(1));
        let zero = SparseVec::empty(ds.d_x());
        assert_eq!(predict_tree(&tree, &zero), ds.labels.row(1));
    }

    #[test]
    fn zero_feature_row_routes_deterministically() {
        let ds = two_group_dataset(20);
        let cfg = cfg_for_tests();
        let indices: Vec<u32> = (0..40).collect();
        let (tree, _) = train_tree(&ds, &indices, &cfg, 0);
        let zero = SparseVec::empty(ds.d_x());
        let first = predict_tree(&tree, &zero).clone();
        for _ in 0..5 {
            assert_eq!(predict_tree(&tree, &zero), &first);
        }
        // A zero row ties everywhere, so it must walk the leftmost path.
        let mut node = &tree.root;
        while let TreeNode::Internal { children, .. } = node {
            node = &children[0];
        }
        match node {
            TreeNode::Leaf { label_mean } => assert_eq!(label_mean, &first),
            _ => unreachable!(),
        }
    }

    #[test]
    fn training_is_deterministic() {
        let ds = two_group_dataset(30);
        let cfg = TrainConfig {
            n_leaf: 4,
            k: 3,
            ..cfg_for_tests()
        };
        let indices: Vec<u32> = (0..60).collect();
        let (t1, s1) = train_tree(&ds, &indices, &cfg, 5);
        let (t2, s2) = train_tree(&ds, &indices, &cfg, 5);
        assert_eq!(t1, t2);
        assert_eq!(s1, s2);
        let (t3, _) = train_tree(&ds, &indices, &cfg, 6);
        assert_ne!(t1, t3, "different tree indices should differ");
    }

    #[test]
    fn strict_arity_and_node_identity() {
        let ds = two_group_dataset(40);
        let cfg = TrainConfig {
            n_leaf: 3,
            k: 3,
            ..cfg_for_tests()
        };
        let indices: Vec<u32> = (0..80).collect();
        let (tree, stats) = train_tree(&ds, &indices, &cfg, 1);
        fn check_arity(node: &TreeNode, k: usize) {
            if let TreeNode::Internal { children, .. } = node {
                assert_eq!(children.len(), k);
                children.iter().for_each(|c| check_arity(c, k));
            }
        }
        check_arity(&tree.root, cfg.k);
        // Internal-node identity for a strictly k-ary tree.
        assert_eq!(stats.internal_count, (stats.leaf_count - 1) / (cfg.k - 1));
        assert_eq!(stats.leaf_count, tree.root.leaf_count());
        assert_eq!(stats.internal_count, tree.root.internal_count());
        assert_eq!(stats.depth, tree.root.height());
        assert!(stats.critical_path_work <= stats.total_work + 1e-9);
    }

    #[test]
    fn leaf_means_stay_in_unit_interval() {
        let ds = two_group_dataset(25);
        let cfg = TrainConfig {
            n_leaf: 4,
            ..cfg_for_tests()
        };
        let indices: Vec<u32> = (0..50).collect();
        let (tree, _) = train_tree(&ds, &indices, &cfg, 2);
        fn check_leaf(node: &TreeNode) {
            match node {
                TreeNode::Leaf { label_mean } => {
                    for (_, v) in label_mean.iter() {
                        assert!((0.0..=1.0).contains(&v));
                    }
                }
                TreeNode::Internal { children, .. } => children.iter().for_each(check_leaf),
            }
        }
        check_leaf(&tree.root);
    }
}
