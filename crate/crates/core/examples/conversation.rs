//! A person in the critic's seat: instruct, inspect the proposal, accept
//! part of it, then undo.

use duet_core::agents::{AgentConfig, Agents, HeuristicBackend};
use duet_core::dataset::{load_csv, AcceptancePolicy};
use duet_core::expr::OperatorSet;
use duet_core::refine::Conversation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/sample");
    let (table, _, meta) = load_csv(format!("{dir}/loans.csv"), format!("{dir}/meta.json"))?;
    let mut agents = Agents::new(Box::new(HeuristicBackend::new()), AgentConfig::default());
    let policy = AcceptancePolicy::default();
    let ops = OperatorSet::default();
    let mut chat = Conversation::new(table);

    let instruction = "Feature f3 is interesting. Please generate new variants of f3.";
    let proposal = chat.instruct(instruction, &meta, &ops, 5, &policy, &mut agents)?;
    println!("> {instruction}");
    for p in &proposal.preview {
        let mean = p
            .stats
            .as_ref()
            .map_or("rejected".to_string(), |s| format!("mean {:.3}", s.mean));
        println!("  [{}] {} ({mean})", p.position, p.expr);
    }

    let outcome = chat.accept(&[0, 2], &policy)?;
    let names: Vec<&str> = chat.table().names().collect();
    println!("accepted {} -> columns {names:?}", outcome.accepted.len());

    chat.undo()?;
    println!("after undo: {} columns", chat.table().n_cols());
    Ok(())
}
