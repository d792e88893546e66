//! Property tests for the sparse kernels, the data format, the projection,
//! and the ranking metric.

use std::collections::HashSet;
use std::io::Cursor;

use proptest::prelude::*;

use dxml::data::{parse_xmlc, write_xmlc};
use dxml::eval::precision_at_k;
use dxml::projection::{hash64, project_row, ProjectionSpec};
use dxml::sparse::{cosine_similarity, l2_normalize, mean_rows, SparseMatrix, SparseVec};
use dxml::Dataset;

fn signed_sparse_vec(dim: usize, max_nnz: usize) -> impl Strategy<Value = SparseVec> {
    let max_nnz = max_nnz.min(dim);
    prop::collection::btree_map(
        0..dim as u32,
        prop_oneof![-4.0f64..-0.1, 0.1f64..4.0],
        0..=max_nnz,
    )
    .prop_map(move |entries| {
        SparseVec::new(dim, entries.into_iter().collect()).expect("sorted nonzero entries")
    })
}

fn label_vec(dim: usize, max_nnz: usize) -> impl Strategy<Value = SparseVec> {
    let max_nnz = max_nnz.min(dim);
    prop::collection::btree_set(0..dim as u32, 0..=max_nnz).prop_map(move |cols| {
        SparseVec::new(dim, cols.into_iter().map(|c| (c, 1.0)).collect())
            .expect("sorted unit entries")
    })
}

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..8, 1usize..12, 1usize..8).prop_flat_map(|(n, d_x, d_y)| {
        (
            prop::collection::vec(signed_sparse_vec(d_x, 6), n),
            prop::collection::vec(label_vec(d_y, 4), n),
        )
            .prop_map(move |(features, labels)| {
                Dataset::new(
                    SparseMatrix::new(d_x, features).unwrap(),
                    SparseMatrix::new(d_y, labels).unwrap(),
                )
                .unwrap()
            })
    })
}

proptest! {
    #[test]
    fn xmlc_write_parse_is_identity(ds in dataset()) {
        let mut buffer = Vec::new();
        write_xmlc(&ds, &mut buffer).unwrap();
        let parsed = parse_xmlc(Cursor::new(&buffer)).unwrap();
        prop_assert_eq!(parsed, ds);
    }

    #[test]
    fn cosine_is_symmetric_and_scale_invariant(
        a in signed_sparse_vec(16, 8),
        b in signed_sparse_vec(16, 8),
        alpha in 0.1f64..50.0,
    ) {
        let ab = cosine_similarity(&a, &b).unwrap();
        let ba = cosine_similarity(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        let scaled = cosine_similarity(&a.scaled(alpha), &b).unwrap();
        prop_assert!((ab - scaled).abs() < 1e-9);
        prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&ab));
        if a.norm() > 0.0 {
            let self_sim = cosine_similarity(&a, &a).unwrap();
            prop_assert!((self_sim - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_yields_unit_or_zero_norm(a in signed_sparse_vec(16, 8)) {
        let n = l2_normalize(&a).norm();
        if a.is_empty() {
            prop_assert_eq!(n, 0.0);
        } else {
            prop_assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_rows_matches_dense_oracle(
        rows in prop::collection::vec(signed_sparse_vec(50, 10), 1..8),
    ) {
        let m = SparseMatrix::new(50, rows.clone()).unwrap();
        let indices: Vec<usize> = (0..rows.len()).collect();
        let mean = mean_rows(&m, &indices).unwrap();

        let mut dense = vec![0.0f64; 50];
        for row in &rows {
            for (c, v) in row.iter() {
                dense[c as usize] += v;
            }
        }
        for value in dense.iter_mut() {
            *value /= rows.len() as f64;
        }
        let dense_mean = mean.to_dense();
        for (got, want) in dense_mean.iter().zip(&dense) {
            prop_assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_linearity_and_sparsity(
        a in signed_sparse_vec(64, 12),
        b in signed_sparse_vec(64, 12),
        seed in 0u64..1000,
    ) {
        let spec = ProjectionSpec {
            out_dim: 16,
            seed_index: hash64(seed, 1),
            seed_sign: hash64(seed, 2),
        };
        let pa = project_row(&a, &spec);
        let pb = project_row(&b, &spec);
        prop_assert!(pa.nnz() <= a.nnz());
        prop_assert!(pb.nnz() <= b.nnz());

        let summed = SparseVec::from_dense(
            &a.to_dense()
                .iter()
                .zip(b.to_dense().iter())
                .map(|(&x, &y)| x + y)
                .collect::<Vec<_>>(),
        );
        let direct = project_row(&summed, &spec).to_dense();
        let pa_dense = pa.to_dense();
        let pb_dense = pb.to_dense();
        for j in 0..16 {
            prop_assert!((direct[j] - (pa_dense[j] + pb_dense[j])).abs() < 1e-9);
        }
    }

    #[test]
    fn precision_matches_set_intersection_oracle(
        ranking in prop::collection::btree_set(0usize..40, 0..10),
        relevant in prop::collection::btree_set(0usize..40, 0..10),
        k in 1usize..8,
    ) {
        let ranking: Vec<usize> = ranking.into_iter().collect();
        let relevant: Vec<usize> = relevant.into_iter().collect();
        let got = precision_at_k(&ranking, &relevant, k).unwrap();

        let top: HashSet<usize> = ranking.iter().take(k).copied().collect();
        let truth: HashSet<usize> = relevant.iter().copied().collect();
        let oracle = top.intersection(&truth).count() as f64 / k as f64;
        prop_assert_eq!(got, oracle);
    }
}
