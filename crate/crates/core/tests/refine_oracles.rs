mod common;

use common::{xor_of_signs, TestRng};
use duet_core::agents::{AgentConfig, Agents, HeuristicBackend, ReplayBackend, ReplayMode};
use duet_core::dataset::{load_csv_reader, write_csv_string, DatasetMeta, Labels};
use duet_core::expr::OperatorSet;
use duet_core::refine::{run, LoopConfig, RunResult};
use proptest::prelude::*;

fn heuristic() -> Agents {
    Agents::new(Box::new(HeuristicBackend::new()), AgentConfig::default())
}

fn loop_config() -> LoopConfig {
    LoopConfig {
        iterations: 3,
        ..Default::default()
    }
}

/// CSV text with a `label` column appended.
fn csv_with_labels(seed: u64, labels_of: impl Fn(&[usize]) -> Vec<usize>) -> (String, DatasetMeta) {
    let (table, labels, mut meta) = xor_of_signs(seed, 120, 2);
    let permuted = labels_of(&labels);
    let labels = Labels {
        classes: vec!["neg".into(), "pos".into()],
        values: permuted,
    };
    meta.target_name = "label".into();
    (
        write_csv_string(&table, Some(("label", &labels))).unwrap(),
        meta,
    )
}

fn run_from_csv(csv: &str, meta: &DatasetMeta, agents: &mut Agents) -> RunResult {
    let (table, _, meta) = load_csv_reader(csv.as_bytes(), meta).unwrap();
    run(
        &table,
        &meta,
        &OperatorSet::default(),
        &loop_config(),
        agents,
    )
    .unwrap()
}

fn conversation(r: &RunResult) -> Vec<(String, String, String)> {
    r.transcript
        .records()
        .iter()
        .map(|t| (t.system.clone(), t.user.clone(), t.response.clone()))
        .collect()
}

fn shuffle(labels: &[usize], seed: u64) -> Vec<usize> {
    let mut rng = TestRng::new(seed);
    let mut out = labels.to_vec();
    for i in (1..out.len()).rev() {
        out.swap(i, rng.below(i + 1));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn loop_never_looks_at_labels(data_seed in 0u64..1000, shuffle_seed in any::<u64>()) {
        let (plain, meta) = csv_with_labels(data_seed, |l| l.to_vec());
        let (scrambled, _) = csv_with_labels(data_seed, |l| shuffle(l, shuffle_seed));
        let a = run_from_csv(&plain, &meta, &mut heuristic());
        let b = run_from_csv(&scrambled, &meta, &mut heuristic());
        prop_assert_eq!(&a.table, &b.table);
        prop_assert_eq!(a.sequences_fts(), b.sequences_fts());
        prop_assert_eq!(conversation(&a), conversation(&b));
    }
}

#[test]
fn constant_labels_change_nothing() {
    let (plain, meta) = csv_with_labels(5, |l| l.to_vec());
    let (flat, _) = csv_with_labels(5, |l| vec![0; l.len()]);
    let a = run_from_csv(&plain, &meta, &mut heuristic());
    let b = run_from_csv(&flat, &meta, &mut heuristic());
    assert_eq!(a.table, b.table);
}

#[test]
fn strict_replay_is_bit_identical() {
    let (csv, meta) = csv_with_labels(11, |l| l.to_vec());
    let recorded = run_from_csv(&csv, &meta, &mut heuristic());
    assert_eq!(recorded.transcript.len(), 6);

    let replay = ReplayBackend::new(recorded.transcript.clone(), ReplayMode::Strict);
    let mut agents = Agents::new(Box::new(replay), AgentConfig::default());
    let replayed = run_from_csv(&csv, &meta, &mut agents);

    assert_eq!(recorded.table, replayed.table);
    assert_eq!(recorded.sequences_fts(), replayed.sequences_fts());
    assert_eq!(conversation(&recorded), conversation(&replayed));
    for (a, b) in recorded.iterations.iter().zip(&replayed.iterations) {
        assert_eq!(a.advice, b.advice);
        assert_eq!(a.proposed, b.proposed);
        assert_eq!(a.accepted, b.accepted);
    }
}

#[test]
fn replay_of_a_different_dataset_is_rejected_in_strict_mode() {
    let (csv, meta) = csv_with_labels(11, |l| l.to_vec());
    let recorded = run_from_csv(&csv, &meta, &mut heuristic());

    let (other, _) = csv_with_labels(12, |l| l.to_vec());
    let (table, _, meta) = load_csv_reader(other.as_bytes(), &meta).unwrap();
    let replay = ReplayBackend::new(recorded.transcript, ReplayMode::Strict);
    let mut agents = Agents::new(Box::new(replay), AgentConfig::default());
    let err = run(
        &table,
        &meta,
        &OperatorSet::default(),
        &loop_config(),
        &mut agents,
    )
    .unwrap_err();
    assert!(err.to_string().contains("differs"), "{err}");
}
