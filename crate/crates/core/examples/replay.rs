//! Re-run the loop from the bundled transcript without calling any model.

use duet_core::agents::{AgentConfig, Agents, ReplayBackend, ReplayMode};
use duet_core::dataset::load_csv;
use duet_core::expr::OperatorSet;
use duet_core::refine::{run, LoopConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/sample");
    let (table, _, meta) = load_csv(format!("{dir}/loans.csv"), format!("{dir}/meta.json"))?;
    let backend = ReplayBackend::read(format!("{dir}/transcript.jsonl"), ReplayMode::Strict)?;
    println!("{} recorded calls", backend.remaining());
    let mut agents = Agents::new(Box::new(backend), AgentConfig::default());
    let result = run(
        &table,
        &meta,
        &OperatorSet::default(),
        &LoopConfig::default(),
        &mut agents,
    )?;
    print!("{}", result.sequences_fts());
    Ok(())
}
