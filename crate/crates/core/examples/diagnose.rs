//! Summarize the bundled sample dataset the way the critic sees it.

use duet_core::dataset::load_csv;
use duet_core::diagnosis::{render_stats, summarize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/sample");
    let (table, labels, meta) = load_csv(format!("{dir}/loans.csv"), format!("{dir}/meta.json"))?;
    println!(
        "{} rows, {} features, classes {:?}\n",
        table.n_rows(),
        table.n_cols(),
        labels.classes
    );
    let summary = summarize(&table);
    print!("{}", render_stats(&summary));
    println!("\ntask: {}", meta.task_description);
    Ok(())
}
