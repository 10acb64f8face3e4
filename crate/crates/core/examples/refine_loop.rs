//! Three critic/generator rounds on the sample dataset with the offline
//! heuristic backend.

use duet_core::agents::{AgentConfig, Agents, HeuristicBackend};
use duet_core::dataset::load_csv;
use duet_core::expr::OperatorSet;
use duet_core::harness::timing_profile;
use duet_core::refine::{run, LoopConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/sample");
    let (table, _, meta) = load_csv(format!("{dir}/loans.csv"), format!("{dir}/meta.json"))?;
    let mut agents = Agents::new(Box::new(HeuristicBackend::new()), AgentConfig::default());
    let result = run(
        &table,
        &meta,
        &OperatorSet::default(),
        &LoopConfig::default(),
        &mut agents,
    )?;

    for round in &result.iterations {
        println!("round {}", round.index);
        if let Some(advice) = &round.advice {
            for item in advice.items() {
                println!("  advice: {item}");
            }
        }
        for expr in &round.accepted {
            println!("  + {expr}");
        }
        for r in &round.rejections {
            println!("  - {} ({:?})", r.expr, r.reason);
        }
    }
    println!("\n{}", result.sequences_fts());
    println!("total {:.4}s", timing_profile(&result).total);
    Ok(())
}
