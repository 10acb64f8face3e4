mod common;

use common::{meta_for, table_from, xor_of_signs, TestRng};
use duet_core::agents::{
    build_critic_prompt, build_generator_prompt, parse_critique, run_critic, run_generator,
    AgentConfig, AgentRole, ChatBackend, ChatRequest, CritiqueAdvice, FeatureEntry,
    HeuristicBackend, Prompt, ReplayBackend, ReplayMode, Transcript,
};
use duet_core::dataset::{DatasetMeta, FeatureTable};
use duet_core::diagnosis::summarize;
use duet_core::expr::OperatorSet;
use proptest::prelude::*;

fn config() -> AgentConfig {
    AgentConfig {
        backoff_base_ms: 0,
        ..Default::default()
    }
}

fn ask(backend: &mut dyn ChatBackend, role: AgentRole, prompt: &Prompt) -> String {
    backend
        .complete(&ChatRequest {
            role,
            system: prompt.system.clone(),
            user: prompt.user.clone(),
            temperature: 0.0,
            max_tokens: 256,
        })
        .unwrap()
}

fn critic_prompt(table: &FeatureTable, meta: &DatasetMeta) -> Prompt {
    build_critic_prompt(meta, &summarize(table), &FeatureEntry::from_table(table))
}

/// Raw heuristic responses for one critic/generator round.
fn heuristic_round(table: &FeatureTable, meta: &DatasetMeta) -> (String, String) {
    let mut backend = HeuristicBackend::new();
    let critique = ask(&mut backend, AgentRole::Critic, &critic_prompt(table, meta));
    let advice = parse_critique(&critique).expect("heuristic critic uses both headers");
    let gen_prompt = build_generator_prompt(
        meta,
        &OperatorSet::default(),
        &advice,
        &FeatureEntry::from_table(table),
        10,
    );
    (
        critique,
        ask(&mut backend, AgentRole::Generator, &gen_prompt),
    )
}

fn naive_abs_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxy / (sxx * syy).sqrt()).abs()
}

fn naive_skew(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

#[test]
fn heuristic_rule_trace() {
    let mut rng = TestRng::new(11);
    let rows = 300;
    let base: Vec<f64> = (0..rows).map(|_| rng.normal()).collect();
    let twin: Vec<f64> = base.iter().map(|v| 2.0 * v + 1e-9 * rng.normal()).collect();
    let skewed: Vec<f64> = (0..rows).map(|_| (1.5 * rng.normal()).exp()).collect();
    let flat: Vec<f64> = (0..rows).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let cols = vec![base, twin, skewed, flat];

    // independent trace of the rules
    let mut best = (0, 1, -1.0);
    for i in 0..4 {
        for j in i + 1..4 {
            let r = naive_abs_r(&cols[i], &cols[j]);
            if r > best.2 + 1e-12 {
                best = (i, j, r);
            }
        }
    }
    let s = (0..4)
        .max_by(|&a, &b| {
            naive_skew(&cols[a])
                .abs()
                .total_cmp(&naive_skew(&cols[b]).abs())
                .then(b.cmp(&a))
        })
        .unwrap();
    assert_eq!(
        (best.0, best.1, s),
        (0, 1, 2),
        "fixture no longer exercises the rule"
    );
    let expected = format!(
        "<SEQ>f{a}*f{b},log(f{c}),f{a}/f{b}</SEQ>",
        a = best.0 + 1,
        b = best.1 + 1,
        c = s + 1
    );

    let names = ["height_cm", "height_in", "income", "score"];
    let table = table_from(&names, cols);
    let (critique, generation) = heuristic_round(&table, &meta_for(&names));
    assert!(
        critique.contains("f1 (height_cm) and f2 (height_in)"),
        "{critique}"
    );
    assert!(generation.ends_with(&expected), "{generation}");
}

#[test]
fn independent_symmetric_columns_tie_break_to_first_pair() {
    let (table, _, meta) = xor_of_signs(5, 400, 2);
    let (critique, generation) = heuristic_round(&table, &meta);
    assert!(critique.contains("f1 (x1) and f2 (x2)"), "{critique}");
    let seq = generation.rsplit("<SEQ>").next().unwrap();
    assert!(seq.starts_with("f1*f2,log(f"), "{generation}");
    assert!(seq.contains(",f1/f2</SEQ>"), "{generation}");
}

#[test]
fn heuristic_is_deterministic() {
    let (table, _, meta) = xor_of_signs(9, 200, 3);
    assert_eq!(
        heuristic_round(&table, &meta),
        heuristic_round(&table, &meta)
    );
    assert_eq!(critic_prompt(&table, &meta), critic_prompt(&table, &meta));
}

#[test]
fn heuristic_critic_answers_in_both_sections() {
    let names = ["id", "temperature", "humidity", "wind_speed", "pressure"];
    let mut rng = TestRng::new(3);
    let cols: Vec<Vec<f64>> = vec![
        (0..250).map(f64::from).collect(),
        (0..250).map(|_| 20.0 + 5.0 * rng.normal()).collect(),
        (0..250).map(|_| rng.uniform(10.0, 90.0)).collect(),
        (0..250).map(|_| (0.8 * rng.normal()).exp() * 3.0).collect(),
        (0..250).map(|_| 1013.0 + rng.normal()).collect(),
    ];
    let table = table_from(&names, cols);
    let mut meta = meta_for(&names);
    meta.task_description = "Predict whether it rains tomorrow.".into();
    let advice = run_critic(
        &mut HeuristicBackend::new(),
        &critic_prompt(&table, &meta),
        &config(),
        &mut Transcript::new(),
    )
    .unwrap();
    assert_eq!(advice.semantic_advice.len(), 1);
    assert_eq!(advice.distributional_advice.len(), 1);
    assert!(
        advice.distributional_advice[0].starts_with("f4 (wind_speed)"),
        "{advice:?}"
    );
}

#[test]
fn variants_of_a_single_feature() {
    let (table, _, meta) = xor_of_signs(1, 100, 2);
    let advice = CritiqueAdvice::instruction(
        "Feature f3 is interesting. Please generate new variants of f3.",
    );
    let prompt = build_generator_prompt(
        &meta,
        &OperatorSet::default(),
        &advice,
        &FeatureEntry::from_table(&table),
        10,
    );
    let seq = run_generator(
        &mut HeuristicBackend::new(),
        &prompt,
        &OperatorSet::default(),
        10,
        &config(),
        &mut Transcript::new(),
    )
    .unwrap();
    assert!(seq.len() >= 3);
    for e in seq.iter() {
        assert!(e.references(3), "{e} does not use f3");
    }
}

#[test]
fn generator_respects_operator_set() {
    let (table, _, meta) = xor_of_signs(1, 100, 2);
    let ops = OperatorSet::from_names(["add", "sqrt"]).unwrap();
    let advice = CritiqueAdvice::instruction("combine f1 with f2");
    let prompt = build_generator_prompt(&meta, &ops, &advice, &FeatureEntry::from_table(&table), 5);
    let seq = run_generator(
        &mut HeuristicBackend::new(),
        &prompt,
        &ops,
        5,
        &config(),
        &mut Transcript::new(),
    )
    .unwrap();
    assert!(!seq.is_empty());
}

#[test]
fn record_then_replay_reproduces_advice_and_sequence() {
    let (table, _, meta) = xor_of_signs(2, 300, 2);
    let ops = OperatorSet::default();
    let entries = FeatureEntry::from_table(&table);
    let run = |backend: &mut dyn ChatBackend, transcript: &mut Transcript| {
        let advice = run_critic(
            backend,
            &critic_prompt(&table, &meta),
            &config(),
            transcript,
        )
        .unwrap();
        let prompt = build_generator_prompt(&meta, &ops, &advice, &entries, 10);
        let seq = run_generator(backend, &prompt, &ops, 10, &config(), transcript).unwrap();
        (advice, seq)
    };
    let mut recorded = Transcript::new();
    let original = run(&mut HeuristicBackend::new(), &mut recorded);
    assert_eq!(recorded.len(), 2);

    let text = recorded.to_jsonl();
    let reloaded = Transcript::from_jsonl(text.as_bytes()).unwrap();
    let mut replay = ReplayBackend::new(reloaded, ReplayMode::Strict);
    let mut again = Transcript::new();
    assert_eq!(run(&mut replay, &mut again), original);
    assert_eq!(replay.remaining(), 0);
    assert_eq!(again.records()[0].response, recorded.records()[0].response);
}

#[test]
fn self_repair_through_scripted_transcript() {
    let mut script = Transcript::new();
    script.push(
        AgentRole::Generator,
        "",
        "",
        "Here you go:\n<SEQ>f1*(f2</SEQ>",
    );
    script.push(
        AgentRole::Generator,
        "",
        "",
        "Fixed.\n<SEQ>f1*(f2+f3),sqrt(f4)</SEQ>",
    );
    let mut backend = ReplayBackend::new(script, ReplayMode::Lenient);
    let prompt = Prompt {
        system: "sys".into(),
        user: "usr".into(),
    };
    let mut transcript = Transcript::new();
    let seq = run_generator(
        &mut backend,
        &prompt,
        &OperatorSet::default(),
        10,
        &config(),
        &mut transcript,
    )
    .unwrap();
    assert_eq!(seq.to_string(), "f1*(f2+f3),sqrt(f4)");
    let retry_user = &transcript.records()[1].user;
    assert!(retry_user.contains("expected `)`"), "{retry_user}");
}

#[test]
fn exhausted_replay_is_an_error() {
    let mut backend = ReplayBackend::new(Transcript::new(), ReplayMode::Lenient);
    let prompt = Prompt {
        system: String::new(),
        user: String::new(),
    };
    let err = run_critic(&mut backend, &prompt, &config(), &mut Transcript::new()).unwrap_err();
    assert!(err.to_string().contains("exhausted"), "{err}");
}

proptest! {
    #[test]
    fn advice_items_are_embedded_verbatim(
        semantic in prop::collection::vec("[ -~]{1,40}", 0..4),
        distribution in prop::collection::vec("[ -~]{1,40}", 1..4),
        k in 1usize..20,
    ) {
        let names = ["a", "b", "c"];
        let table = table_from(&names, vec![vec![1.0, 2.0], vec![3.0, 5.0], vec![0.5, 0.25]]);
        let advice = CritiqueAdvice {
            semantic_advice: semantic,
            distributional_advice: distribution,
            raw_response: String::new(),
        };
        let prompt = build_generator_prompt(&meta_for(&names), &OperatorSet::default(), &advice, &FeatureEntry::from_table(&table), k);
        for item in advice.items() {
            prop_assert!(prompt.user.contains(item));
        }
        let again = build_generator_prompt(&meta_for(&names), &OperatorSet::default(), &advice, &FeatureEntry::from_table(&table), k);
        prop_assert_eq!(prompt, again);
    }

    #[test]
    fn critique_parser_never_panics(text in "\\PC{0,200}") {
        if let Some(advice) = parse_critique(&text) {
            prop_assert!(advice.item_count() > 0);
            prop_assert!(advice.items().all(|i| !i.trim().is_empty()));
        }
    }
}
