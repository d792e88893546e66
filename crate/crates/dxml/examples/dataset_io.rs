//! The dataset text format: header `n d_x d_y`, then one line per instance
//! with a comma-separated label list and `feature:value` pairs.
//!
//! ```bash
//! cargo run -p dxml --example dataset_io
//! ```

use std::io::Cursor;

use dxml::data::{parse_xmlc, write_xmlc};

fn main() -> dxml::Result<()> {
    let text = "\
4 5 3
0 0:1.5 2:0.5
1,2 1:2.0 4:1.0
 3:0.25
2
";
    println!("input file:\n{}", text);
    let dataset = parse_xmlc(Cursor::new(text.as_bytes()))?;
    println!(
        "parsed {} instances, {} features, {} labels",
        dataset.n(),
        dataset.d_x(),
        dataset.d_y()
    );
    for i in 0..dataset.n() {
        println!(
            "  instance {}: features {:?} labels {:?}",
            i,
            dataset.features.row(i).entries(),
            dataset.labels.row(i).entries()
        );
    }

    // Writing and re-parsing is the identity; note the label-free third line
    // keeps its leading space and the feature-free fourth keeps none.
    let mut bytes = Vec::new();
    write_xmlc(&dataset, &mut bytes)?;
    let round_tripped = parse_xmlc(Cursor::new(&bytes))?;
    println!(
        "round-trip identical: {}",
        if round_tripped == dataset {
            "yes"
        } else {
            "NO"
        }
    );

    // Errors carry 1-based line numbers.
    let bad = "2 3 2\n0 0:1\n0 7:1\n";
    match parse_xmlc(Cursor::new(bad.as_bytes())) {
        Err(e) => println!("malformed file rejected: {}", e),
        Ok(_) => println!("unexpectedly parsed"),
    }
    Ok(())
}
