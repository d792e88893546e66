//! Synthetic multilabel datasets for examples, benchmarks, and tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{Dataset, SparseMatrix, SparseVec};

/// Shape of a clustered synthetic dataset: `groups` latent clusters, each
/// with its own disjoint feature signature and label set.
#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub groups: usize,
    pub train_per_group: usize,
    pub test_per_group: usize,
    pub d_x: usize,
    pub d_y: usize,
    /// Feature axes per group signature.
    pub feature_support: usize,
    /// Labels owned by each group; every instance carries all of them.
    pub labels_per_group: usize,
    /// Relative jitter on feature values.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            groups: 8,
            train_per_group: 60,
            test_per_group: 15,
            d_x: 64,
            d_y: 32,
            feature_support: 6,
            labels_per_group: 3,
            noise: 0.3,
            seed: 1,
        }
    }
}

/// Generate a train/test pair of group-structured datasets. Instances in a
/// group share that group's feature axes (with value jitter and one extra
/// random axis per instance) and carry exactly the group's labels, so a
/// reasonable classifier recovers most of the labels on held-out rows.
pub fn clustered_dataset(cfg: &SynthConfig) -> Result<(Dataset, Dataset)> {
    if cfg.groups * cfg.feature_support > cfg.d_x {
        return Err(Error::InvalidConfig(format!(
            "{} groups x {} feature axes exceed d_x = {}",
            cfg.groups, cfg.feature_support, cfg.d_x
        )));
    }
    if cfg.groups * cfg.labels_per_group > cfg.d_y {
        return Err(Error::InvalidConfig(format!(
            "{} groups x {} labels exceed d_y = {}",
            cfg.groups, cfg.labels_per_group, cfg.d_y
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let train = sample_split(cfg, cfg.train_per_group, &mut rng)?;
    let test = sample_split(cfg, cfg.test_per_group, &mut rng)?;
    Ok((train, test))
}

fn sample_split(cfg: &SynthConfig, per_group: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let mut features = Vec::with_capacity(cfg.groups * per_group);
    let mut labels = Vec::with_capacity(cfg.groups * per_group);
    for group in 0..cfg.groups {
        let first_axis = group * cfg.feature_support;
        let first_label = group * cfg.labels_per_group;
        for _ in 0..per_group {
            let mut entries: Vec<(u32, f64)> = (0..cfg.feature_support)
                .map(|a| {
                    let value = 1.0 + cfg.noise * rng.random_range(-1.0..1.0);
                    ((first_axis + a) as u32, value)
                })
                .collect();
            // One random off-signature axis keeps rows from being identical.
            let extra = rng.random_range(0..cfg.d_x) as u32;
            entries.push((extra, 0.25));
            features.push(SparseVec::collect(cfg.d_x, entries)?);
            labels.push(SparseVec::new(
                cfg.d_y,
                (0..cfg.labels_per_group)
                    .map(|l| ((first_label + l) as u32, 1.0))
                    .collect(),
            )?);
        }
    }
    Dataset::new(
        SparseMatrix::new(cfg.d_x, features)?,
        SparseMatrix::new(cfg.d_y, labels)?,
    )
}

/// Fully random sparse dataset: feature rows with up to `max_feature_nnz`
/// entries and values in [-2, 2], label rows with up to `max_label_nnz`
/// set labels (possibly none).
pub fn random_dataset(
    seed: u64,
    n: usize,
    d_x: usize,
    d_y: usize,
    max_feature_nnz: usize,
    max_label_nnz: usize,
) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let nnz = rng.random_range(0..=max_feature_nnz.min(d_x));
        let cols = distinct_columns(&mut rng, nnz, d_x);
        let entries: Vec<(u32, f64)> = cols
            .into_iter()
            .map(|c| {
                let mut v = 0.0;
                while v == 0.0 {
                    v = rng.random_range(-2.0..2.0);
                }
                (c, v)
            })
            .collect();
        features.push(SparseVec::collect(d_x, entries)?);

        let nnz = rng.random_range(0..=max_label_nnz.min(d_y));
        let cols = distinct_columns(&mut rng, nnz, d_y);
        labels.push(SparseVec::new(
            d_y,
            cols.into_iter().map(|c| (c, 1.0)).collect(),
        )?);
    }
    Dataset::new(
        SparseMatrix::new(d_x, features)?,
        SparseMatrix::new(d_y, labels)?,
    )
}

fn distinct_columns(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<u32> {
    let mut cols = std::collections::BTreeSet::new();
    while cols.len() < count {
        cols.insert(rng.random_range(0..dim) as u32);
    }
    cols.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustered_dataset_has_expected_shape() {
        let cfg = SynthConfig::default();
        let (train, test) = clustered_dataset(&cfg).unwrap();
        assert_eq!(train.n(), cfg.groups * cfg.train_per_group);
        assert_eq!(test.n(), cfg.groups * cfg.test_per_group);
        assert_eq!(train.d_x(), cfg.d_x);
        assert_eq!(train.d_y(), cfg.d_y);
        for i in 0..train.n() {
            assert_eq!(train.labels.row(i).nnz(), cfg.labels_per_group);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig::default();
        assert_eq!(
            clustered_dataset(&cfg).unwrap(),
            clustered_dataset(&cfg).unwrap()
        );
        let other = SynthConfig {
            seed: 2,
            ..SynthConfig::default()
        };
        assert_ne!(
            clustered_dataset(&cfg).unwrap(),
            clustered_dataset(&other).unwrap()
        );
    }

    #[test]
    fn random_dataset_respects_bounds() {
        let ds = random_dataset(9, 100, 40, 20, 10, 4).unwrap();
        assert_eq!(ds.n(), 100);
        for i in 0..ds.n() {
            assert!(ds.features.row(i).nnz() <= 10);
            assert!(ds.labels.row(i).nnz() <= 4);
        }
        assert_eq!(random_dataset(9, 100, 40, 20, 10, 4).unwrap(), ds);
    }
}
