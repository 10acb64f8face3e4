//! Compare DT, RF and KNN on the sample dataset before and after one
//! heuristic round.

use duet_core::agents::{AgentConfig, Agents, HeuristicBackend};
use duet_core::dataset::load_csv;
use duet_core::expr::OperatorSet;
use duet_core::harness::{compare, ClassifierSpec, DEFAULT_SEEDS, DEFAULT_TEST_FRACTION};
use duet_core::refine::{run, LoopConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/sample");
    let (table, labels, meta) = load_csv(format!("{dir}/loans.csv"), format!("{dir}/meta.json"))?;
    let mut agents = Agents::new(Box::new(HeuristicBackend::new()), AgentConfig::default());
    let cfg = LoopConfig {
        iterations: 1,
        ..Default::default()
    };
    let result = run(&table, &meta, &OperatorSet::default(), &cfg, &mut agents)?;

    let specs = [
        ClassifierSpec::tree(),
        ClassifierSpec::forest(),
        ClassifierSpec::knn(),
    ];
    let report = compare(
        &table,
        &result.table,
        &labels.values,
        &specs,
        &DEFAULT_SEEDS,
        DEFAULT_TEST_FRACTION,
    )?;
    print!("{}", report.to_text());
    Ok(())
}
