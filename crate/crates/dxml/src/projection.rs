//! Hashing-trick sparse random projection.
//!
//! Each input column index is a key. One hash picks the output bucket, a
//! second hash picks a ±1 sign, and colliding keys sum. This realizes a fixed
//! signed projection matrix without ever materializing it, so projection cost
//! depends only on the non-zeros of the input row.

use crate::error::Result;
use crate::sparse::{SparseMatrix, SparseVec};

/// The implicit projection matrix: output dimension plus the two hash seeds
/// (bucket seed and sign seed). Equal specs define equal projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionSpec {
    pub out_dim: usize,
    pub seed_index: u64,
    pub seed_sign: u64,
}

/// Deterministic 64-bit mix: the SplitMix64 avalanche finalizer applied to
/// `key XOR seed`. Stateless, stable across platforms, and bijective in `key`
/// for a fixed `seed`.
///
/// Frozen test vectors (see the tests below):
/// `hash64(0, 0) = 0`, `hash64(1, 0) = 0x5692161d100b05e5`.
pub fn hash64(key: u64, seed: u64) -> u64 {
    let mut z = key ^ seed;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a fresh stream seed from a parent seed and a tag.
pub(crate) fn chain_seed(parent: u64, tag: u64) -> u64 {
    hash64(tag, parent)
}

/// Project one row through a projection spec with caller-supplied hash functions.
/// Entry `(key, v)` contributes `sign(key) * v` to bucket
/// `hash1(key, seed_index) % out_dim`, with `sign(key)` equal to
/// `2 * (hash2(key, seed_sign) % 2) - 1`. Colliding keys sum; exact zeros
/// produced by cancellation are dropped.
pub fn project_row_with<H1, H2>(
    row: &SparseVec,
    spec: &ProjectionSpec,
    hash1: H1,
    hash2: H2,
) -> SparseVec
where
    H1: Fn(u64, u64) -> u64,
    H2: Fn(u64, u64) -> u64,
{
    let p = spec.out_dim as u64;
    let raw: Vec<(u32, f64)> = row
        .iter()
        .map(|(col, val)| {
            let bucket = (hash1(col as u64, spec.seed_index) % p) as u32;
            let sign = if hash2(col as u64, spec.seed_sign) % 2 == 1 {
                1.0
            } else {
                -1.0
            };
            (bucket, sign * val)
        })
        .collect();
    SparseVec::collect(spec.out_dim, raw).expect("buckets are reduced modulo out_dim")
}

/// Project one row with the default [`hash64`] mix.
pub fn project_row(row: &SparseVec, spec: &ProjectionSpec) -> SparseVec {
    project_row_with(row, spec, hash64, hash64)
}

/// Project every row of a matrix; the result has `out_dim` columns.
pub fn hash_project(rows: &SparseMatrix, spec: &ProjectionSpec) -> Result<SparseMatrix> {
    let projected: Vec<SparseVec> = rows.rows().iter().map(|r| project_row(r, spec)).collect();
    SparseMatrix::new(spec.out_dim, projected)
}

/// Same as [`hash_project`] but with injected hash functions, so degenerate
/// stub hashes can be exercised in tests.
pub fn hash_project_with<H1, H2>(
    rows: &SparseMatrix,
    spec: &ProjectionSpec,
    hash1: H1,
    hash2: H2,
) -> Result<SparseMatrix>
where
    H1: Fn(u64, u64) -> u64 + Copy,
    H2: Fn(u64, u64) -> u64 + Copy,
{
    let projected: Vec<SparseVec> = rows
        .rows()
        .iter()
        .map(|r| project_row_with(r, spec, hash1, hash2))
        .collect();
    SparseMatrix::new(spec.out_dim, projected)
}

/// Per-tree feature and label projection specs, derived deterministically
/// from the master seed. `hash64` is bijective in the tree index, so distinct
/// trees always get distinct seed bases; the four seeds within a tree are
/// distinct with overwhelming probability.
pub fn derive_tree_seeds(
    master_seed: u64,
    tree_index: usize,
    feature_out_dim: usize,
    label_out_dim: usize,
) -> (ProjectionSpec, ProjectionSpec) {
    let base = hash64(tree_index as u64, master_seed);
    let feature = ProjectionSpec {
        out_dim: feature_out_dim,
        seed_index: hash64(1, base),
        seed_sign: hash64(2, base),
    };
    let label = ProjectionSpec {
        out_dim: label_out_dim,
        seed_index: hash64(3, base),
        seed_sign: hash64(4, base),
    };
    (feature, label)
}

/// RNG stream seed for the recursion of one tree.
pub(crate) fn tree_rng_seed(master_seed: u64, tree_index: usize) -> u64 {
    chain_seed(hash64(tree_index as u64, master_seed), 5)
}
