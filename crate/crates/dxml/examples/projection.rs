//! The hashing-trick projection: each input column hashes to an output
//! bucket and a sign, collisions sum, and the whole map is linear and
//! deterministic in its seeds.
//!
//! ```bash
//! cargo run -p dxml --example projection
//! ```

use dxml::projection::{derive_tree_seeds, hash64, project_row, ProjectionSpec};
use dxml::sparse::SparseVec;

fn main() -> dxml::Result<()> {
    let row = SparseVec::new(1000, vec![(3, 1.0), (250, -2.0), (251, 0.5), (999, 4.0)])?;
    let spec = ProjectionSpec {
        out_dim: 8,
        seed_index: hash64(1, 42),
        seed_sign: hash64(2, 42),
    };

    let projected = project_row(&row, &spec);
    println!("input ({} dims): {:?}", row.dim(), row.entries());
    println!(
        "projected ({} dims): {:?}",
        spec.out_dim,
        projected.entries()
    );
    for (col, val) in row.iter() {
        let bucket = hash64(col as u64, spec.seed_index) % spec.out_dim as u64;
        let sign = if hash64(col as u64, spec.seed_sign) % 2 == 1 {
            '+'
        } else {
            '-'
        };
        println!(
            "  column {:>3} -> bucket {} with sign {}{}",
            col,
            bucket,
            sign,
            val.abs()
        );
    }

    // Linearity: projecting a scaled row equals scaling the projection.
    let scaled = project_row(&row.scaled(2.5), &spec);
    let matches = scaled
        .entries()
        .iter()
        .zip(projected.entries())
        .all(|(&(c1, v1), &(c2, v2))| c1 == c2 && (v1 - 2.5 * v2).abs() < 1e-12);
    println!("project(2.5 * x) == 2.5 * project(x): {}", matches);

    // Per-tree seeds derive deterministically from one master seed.
    let (f0, l0) = derive_tree_seeds(42, 0, 8, 8);
    let (f1, _) = derive_tree_seeds(42, 1, 8, 8);
    println!(
        "tree 0 feature seeds: ({:#x}, {:#x})",
        f0.seed_index, f0.seed_sign
    );
    println!(
        "tree 0 label   seeds: ({:#x}, {:#x})",
        l0.seed_index, l0.seed_sign
    );
    println!(
        "tree 1 feature seeds: ({:#x}, {:#x})",
        f1.seed_index, f1.seed_sign
    );
    Ok(())
}
