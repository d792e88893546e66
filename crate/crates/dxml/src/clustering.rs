//! Spherical k-means over sparse rows with k-means++ initialization.
//!
//! Rows are L2-normalized once up front, so cosine similarity reduces to a
//! plain dot product against unit-or-empty centroids. The per-iteration
//! objective (mean cosine of rows to their assigned centroids) is
//! non-decreasing, which the instrumentation below records and tests assert.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::sparse::{cosine_unchecked, l2_normalize, mean_of_rows, SparseMatrix, SparseVec};

/// Configuration for one k-means run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    /// Number of clusters; at least 2.
    pub k: usize,
    /// Iteration cap; at least 1.
    pub max_iters: usize,
    pub seed: u64,
}

/// Result of a clustering run: one label per input row, the final centroids
/// (unit-normalized or empty), and instrumentation used by cost accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centroids: Vec<SparseVec>,
    /// Centroid-update rounds actually performed (≤ `max_iters`).
    pub iterations: usize,
    /// Mean cosine of rows to their assigned centroids, recorded after every
    /// assignment pass. Non-decreasing.
    pub objective_trace: Vec<f64>,
    /// Count of sparse entries touched by dot products and accumulations.
    pub entry_ops: u64,
}

/// Index of the centroid with the highest cosine similarity to `row`.
/// Ties, including the all-zero case, resolve to the lowest index.
pub fn assign_nearest(row: &SparseVec, centroids: &[SparseVec]) -> usize {
    debug_assert!(!centroids.is_empty());
    let mut best = 0usize;
    let mut best_sim = f64::NEG_INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let sim = cosine_unchecked(row, c);
        if sim > best_sim {
            best_sim = sim;
            best = i;
        }
    }
    best
}

/// k-means++ seeding: the first center is uniform over rows, each later
/// center is drawn with probability proportional to `D(y)²` where `D(y)` is
/// `1 − cos(y, nearest chosen center)`. If every candidate has `D² = 0`
/// (duplicate rows), the pick falls back to uniform, so duplicate centers are
/// possible by design.
pub fn kmeanspp_init(rows: &SparseMatrix, k: usize, rng: &mut impl Rng) -> Vec<SparseVec> {
    let refs: Vec<&SparseVec> = rows.rows().iter().collect();
    kmeanspp_init_rows(&refs, k, rng, &mut 0)
}

pub(crate) fn kmeanspp_init_rows(
    rows: &[&SparseVec],
    k: usize,
    rng: &mut impl Rng,
    entry_ops: &mut u64,
) -> Vec<SparseVec> {
    assert!(!rows.is_empty(), "kmeans++ needs at least one row");
    let n = rows.len();
    let mut centers: Vec<SparseVec> = Vec::with_capacity(k);
    centers.push(rows[rng.random_range(0..n)].clone());

    let mut d2 = vec![f64::INFINITY; n];
    while centers.len() < k {
        let newest = centers.last().unwrap();
        for (i, row) in rows.iter().enumerate() {
            *entry_ops += row.nnz() as u64;
            let d = (1.0 - cosine_unchecked(row, newest)).max(0.0);
            d2[i] = d2[i].min(d * d);
        }
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random_range(0.0..total);
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(rows[pick].clone());
    }
    centers
}

/// Spherical k-means. Alternates assignment (argmax cosine) and centroid
/// update (L2-normalized mean of assigned rows) until assignments stop
/// changing or `max_iters` update rounds have run. The final labels are
/// always argmax-consistent with the returned centroids because every round
/// ends with an assignment pass.
pub fn spherical_kmeans(rows: &SparseMatrix, cfg: &KMeansConfig) -> ClusterAssignment {
    let refs: Vec<&SparseVec> = rows.rows().iter().collect();
    spherical_kmeans_rows(&refs, cfg)
}

pub(crate) fn spherical_kmeans_rows(rows: &[&SparseVec], cfg: &KMeansConfig) -> ClusterAssignment {
    assert!(!rows.is_empty(), "k-means needs at least one row");
    assert!(cfg.k >= 2, "branching factor must be at least 2");
    assert!(cfg.max_iters >= 1);

    let dim = rows[0].dim();
    let mut entry_ops = 0u64;
    let normalized: Vec<SparseVec> = rows
        .iter()
        .map(|r| {
            entry_ops += r.nnz() as u64;
            l2_normalize(r)
        })
        .collect();
    let norm_refs: Vec<&SparseVec> = normalized.iter().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = kmeanspp_init_rows(&norm_refs, cfg.k, &mut rng, &mut entry_ops);

    let mut objective_trace = Vec::new();
    let (mut labels, obj) = assign_all(&normalized, &centroids, dim, &mut entry_ops);
    objective_trace.push(obj);

    let mut iterations = 0;
    for round in 1..=cfg.max_iters {
        update_centroids(
            &normalized,
            &mut labels,
            &mut centroids,
            dim,
            &mut entry_ops,
        );
        iterations = round;
        let (new_labels, obj) = assign_all(&normalized, &centroids, dim, &mut entry_ops);
        objective_trace.push(obj);
        let converged = new_labels == labels;
        labels = new_labels;
        if converged {
            break;
        }
    }

    ClusterAssignment {
        labels,
        centroids,
        iterations,
        objective_trace,
        entry_ops,
    }
}

/// Centroids scattered into dense buffers so a row's similarity to all k of
/// them costs `k * nnz(row)` probes. Probing accumulates the same products
/// in the same order as a merge-join dot (absent columns contribute an
/// exact 0.0), so the results are bit-identical.
pub(crate) struct DenseCentroids {
    dim: usize,
    buffers: Vec<Vec<f64>>,
}

impl DenseCentroids {
    pub(crate) fn new(centroids: &[SparseVec], dim: usize, entry_ops: &mut u64) -> Self {
        let buffers = centroids
            .iter()
            .map(|c| {
                *entry_ops += c.nnz() as u64;
                c.to_dense()
            })
            .collect();
        DenseCentroids { dim, buffers }
    }

    /// Dot products of `row` against every centroid.
    pub(crate) fn dots(&self, row: &SparseVec, sims: &mut Vec<f64>, entry_ops: &mut u64) {
        debug_assert_eq!(row.dim(), self.dim);
        sims.clear();
        sims.resize(self.buffers.len(), 0.0);
        *entry_ops += (row.nnz() * self.buffers.len()) as u64;
        for (col, val) in row.iter() {
            for (sim, buffer) in sims.iter_mut().zip(&self.buffers) {
                *sim += val * buffer[col as usize];
            }
        }
    }

    /// Argmax of [`Self::dots`]; ties and all-zero rows take the lowest
    /// index. Equals the cosine argmax when centroids are unit or empty.
    pub(crate) fn route(&self, row: &SparseVec, sims: &mut Vec<f64>, entry_ops: &mut u64) -> usize {
        self.dots(row, sims, entry_ops);
        let mut best = 0usize;
        let mut best_sim = f64::NEG_INFINITY;
        for (i, &sim) in sims.iter().enumerate() {
            if sim > best_sim {
                best_sim = sim;
                best = i;
            }
        }
        best
    }
}

/// Assignment pass over unit-or-zero rows and centroids: cosine similarity
/// is the plain dot product here. Returns labels and the mean best
/// similarity (the spherical objective).
fn assign_all(
    rows: &[SparseVec],
    centroids: &[SparseVec],
    dim: usize,
    entry_ops: &mut u64,
) -> (Vec<usize>, f64) {
    let dense = DenseCentroids::new(centroids, dim, entry_ops);
    let mut sims = Vec::new();
    let mut labels = Vec::with_capacity(rows.len());
    let mut objective = 0.0f64;
    for row in rows {
        dense.dots(row, &mut sims, entry_ops);
        let mut best = 0usize;
        let mut best_sim = f64::NEG_INFINITY;
        for (i, &sim) in sims.iter().enumerate() {
            if sim > best_sim {
                best_sim = sim;
                best = i;
            }
        }
        labels.push(best);
        objective += best_sim;
    }
    (labels, objective / rows.len() as f64)
}

fn update_centroids(
    rows: &[SparseVec],
    labels: &mut [usize],
    centroids: &mut [SparseVec],
    dim: usize,
    entry_ops: &mut u64,
) {
    let k = centroids.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &label) in labels.iter().enumerate() {
        members[label].push(i);
    }

    for (cluster, rows_in) in members.iter().enumerate() {
        if rows_in.is_empty() {
            continue;
        }
        for &r in rows_in {
            *entry_ops += rows[r].nnz() as u64;
        }
        let mean = mean_of_rows(rows_in.iter().map(|&r| &rows[r]), dim);
        *entry_ops += mean.nnz() as u64;
        centroids[cluster] = l2_normalize(&mean);
    }

    // Empty-cluster repair: steal the worst-fitting row, skipping rows that
    // are sole members of their cluster and rows already fit perfectly.
    for cluster in 0..k {
        if !members[cluster].is_empty() {
            continue;
        }
        let mut counts = vec![0usize; k];
        for &label in labels.iter() {
            counts[label] += 1;
        }
        let mut victim: Option<(usize, f64)> = None;
        for (i, row) in rows.iter().enumerate() {
            if counts[labels[i]] <= 1 {
                continue;
            }
            *entry_ops += (row.nnz() + centroids[labels[i]].nnz()) as u64;
            let sim = row.dot(&centroids[labels[i]]);
            if sim >= 1.0 - 1e-9 {
                continue;
            }
            match victim {
                Some((_, best)) if sim >= best => {}
                _ => victim = Some((i, sim)),
            }
        }
        if let Some((i, _)) = victim {
            labels[i] = cluster;
            centroids[cluster] = l2_normalize(&rows[i]);
        } else {
            centroids[cluster] = SparseVec::empty(dim);
        }
    }
}
