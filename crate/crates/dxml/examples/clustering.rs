//! Spherical k-means with k-means++ seeding on a toy set of sparse rows.
//!
//! ```bash
//! cargo run -p dxml --example clustering
//! ```

use dxml::clustering::{spherical_kmeans, KMeansConfig};
use dxml::sparse::{SparseMatrix, SparseVec};

fn main() -> dxml::Result<()> {
    // Three directions with a little within-group variation.
    let mut rows = Vec::new();
    for i in 0..4u32 {
        rows.push(SparseVec::new(
            6,
            vec![(0, 1.0), (1, 0.2 + 0.1 * i as f64)],
        )?);
        rows.push(SparseVec::new(
            6,
            vec![(2, 1.0), (3, 0.2 + 0.1 * i as f64)],
        )?);
        rows.push(SparseVec::new(
            6,
            vec![(4, 1.0), (5, 0.2 + 0.1 * i as f64)],
        )?);
    }
    let matrix = SparseMatrix::new(6, rows)?;

    let out = spherical_kmeans(
        &matrix,
        &KMeansConfig {
            k: 3,
            max_iters: 20,
            seed: 5,
        },
    );

    println!("assignments: {:?}", out.labels);
    println!("converged after {} update rounds", out.iterations);
    println!("objective trace (mean cosine to assigned centroid, non-decreasing):");
    for (i, objective) in out.objective_trace.iter().enumerate() {
        println!("  pass {}: {:.6}", i, objective);
    }
    for (i, centroid) in out.centroids.iter().enumerate() {
        let pretty: Vec<String> = centroid
            .iter()
            .map(|(c, v)| format!("{}:{:.3}", c, v))
            .collect();
        println!("centroid {}: [{}]", i, pretty.join(", "));
    }
    Ok(())
}
