//! Print the critic prompt for the sample dataset, then the generator prompt
//! built from the heuristic critic's answer.

use duet_core::agents::{
    build_critic_prompt, build_generator_prompt, AgentConfig, Agents, FeatureEntry,
    HeuristicBackend,
};
use duet_core::dataset::load_csv;
use duet_core::diagnosis::summarize;
use duet_core::expr::OperatorSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/sample");
    let (table, _, meta) = load_csv(format!("{dir}/loans.csv"), format!("{dir}/meta.json"))?;
    let features = FeatureEntry::from_table(&table);

    let critic = build_critic_prompt(&meta, &summarize(&table), &features);
    println!(
        "=== critic system ===\n{}\n=== critic user ===\n{}",
        critic.system, critic.user
    );

    let mut agents = Agents::new(Box::new(HeuristicBackend::new()), AgentConfig::default());
    let advice = agents.critique(&critic)?;
    let generator = build_generator_prompt(&meta, &OperatorSet::default(), &advice, &features, 5);
    println!(
        "=== generator system ===\n{}\n=== generator user ===\n{}",
        generator.system, generator.user
    );
    Ok(())
}
