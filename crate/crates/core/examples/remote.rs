//! One round against an OpenAI-compatible endpoint. Needs DUET_API_KEY;
//! DUET_BASE_URL and DUET_MODEL override the defaults when set.

use duet_core::agents::{AgentConfig, Agents, RemoteConfig, RemoteHttpBackend};
use duet_core::dataset::load_csv;
use duet_core::expr::OperatorSet;
use duet_core::refine::{run, LoopConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = RemoteConfig::default();
    if let Ok(url) = std::env::var("DUET_BASE_URL") {
        config.base_url = url;
    }
    if let Ok(model) = std::env::var("DUET_MODEL") {
        config.model = model;
    }
    let backend = match RemoteHttpBackend::from_env(&config) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("{e}");
            return Ok(());
        }
    };

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/sample");
    let (table, _, meta) = load_csv(format!("{dir}/loans.csv"), format!("{dir}/meta.json"))?;
    let mut agents = Agents::new(Box::new(backend), AgentConfig::default());
    let cfg = LoopConfig {
        iterations: 1,
        ..Default::default()
    };
    let result = run(&table, &meta, &OperatorSet::default(), &cfg, &mut agents)?;
    print!("{}", result.sequences_fts());
    print!("{}", result.transcript.to_jsonl());
    Ok(())
}
