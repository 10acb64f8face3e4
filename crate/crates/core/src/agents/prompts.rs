use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CritiqueAdvice, Prompt};
use crate::dataset::{DatasetMeta, FeatureTable, Provenance};
use crate::diagnosis::{render_stats, Summary};
use crate::expr::OperatorSet;

/// Format exemplar quoted in every generator prompt.
pub const SEQUENCE_EXEMPLAR: &str = "(f1*f2),log(f3),(f4/f5)";

pub(crate) const FEATURES_HEADER: &str = "Feature tokens:";
pub(crate) const BINARY_PREFIX: &str = "binary operators:";
pub(crate) const UNARY_PREFIX: &str = "unary operators:";
pub(crate) const SEMANTIC_HEADER: &str = "Semantic advice:";
pub(crate) const DISTRIBUTION_HEADER: &str = "Distribution advice:";
pub(crate) const DESCRIPTIONS_HEADER: &str = "Original features:";
pub(crate) const STATS_BLOCK_HEADER: &str = "Distribution summary:";

/// A column as the agents see it: its name and where it came from. The
/// token of entry `i` is `f{i+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub name: String,
    pub provenance: Provenance,
}

impl FeatureEntry {
    pub fn from_table(table: &FeatureTable) -> Vec<FeatureEntry> {
        table
            .columns()
            .iter()
            .map(|c| FeatureEntry {
                name: c.name.clone(),
                provenance: c.provenance.clone(),
            })
            .collect()
    }
}

const CRITIC_SYSTEM: &str = "\
You are the critic in a two-agent feature transformation team. A generator \
will turn your advice into new features built from arithmetic and \
mathematical operators over the existing ones. You never see labels or \
model scores; judge the feature space from what the features mean and how \
their values are distributed.

Diagnose the feature space from two angles:
1. Semantic: relate the feature names and descriptions to the task. Point \
out interactions, ratios or transformations that carry domain meaning.
2. Distribution: read the statistics. Point out skewed or heavy-tailed \
columns, strongly correlated pairs, constant columns and scale \
differences, and say how they could be repaired.

Refer to features by their tokens (f1, f2, ...). Answer with exactly these \
two sections and nothing else:
SEMANTIC:
- <one piece of advice per bullet>
DISTRIBUTION:
- <one piece of advice per bullet>";

fn description_line(out: &mut String, token: usize, name: &str, description: &str) {
    if description.trim().is_empty() {
        writeln!(out, "f{token} = {name}").unwrap();
    } else {
        writeln!(out, "f{token} = {name}: {}", description.trim()).unwrap();
    }
}

fn generated_lines(out: &mut String, features: &[FeatureEntry]) {
    let mut any = false;
    for (i, f) in features.iter().enumerate() {
        if let Provenance::Generated { round, .. } = &f.provenance {
            any = true;
            match round {
                Some(r) => writeln!(out, "f{} = {} (round {r})", i + 1, f.name).unwrap(),
                None => writeln!(out, "f{} = {}", i + 1, f.name).unwrap(),
            }
        }
    }
    if !any {
        out.push_str("none yet\n");
    }
}

/// Critic prompt: task, feature descriptions, generated features so far
/// and the rendered distribution summary.
pub fn build_critic_prompt(
    meta: &DatasetMeta,
    stats: &Summary,
    features: &[FeatureEntry],
) -> Prompt {
    let mut user = String::new();
    let task = meta.task_description.trim();
    writeln!(
        user,
        "Task: {}",
        if task.is_empty() {
            "(not described)"
        } else {
            task
        }
    )
    .unwrap();
    writeln!(user, "Target: {}", meta.target_name).unwrap();
    user.push('\n');
    writeln!(user, "{DESCRIPTIONS_HEADER}").unwrap();
    for (i, f) in features.iter().enumerate() {
        if f.provenance.is_original() {
            description_line(
                &mut user,
                i + 1,
                &f.name,
                meta.description_of(&f.name).unwrap_or(""),
            );
        }
    }
    user.push('\n');
    user.push_str("Generated features:\n");
    generated_lines(&mut user, features);
    user.push('\n');
    writeln!(user, "{STATS_BLOCK_HEADER}").unwrap();
    user.push_str(&render_stats(stats));
    user.push('\n');
    user.push_str("Give your diagnosis.");
    Prompt {
        system: CRITIC_SYSTEM.to_string(),
        user,
    }
}

const GENERATOR_ROLE: &str = "\
You are the generator in a two-agent feature transformation team. You \
create new features for a tabular dataset by writing expressions in a \
small token language, following the direction given by the critic.";

const GRAMMAR: &str = "\
sequence := expr (',' expr)*
expr     := term (('+' | '-') term)*
term     := factor (('*' | '/') factor)*
factor   := FEATURE | OPNAME '(' expr ')' | '(' expr ')'";

const FEW_SHOT: &str = "\
Example 1
Features: f1 = height, f2 = weight, f3 = income
Direction: body mass says more than height or weight alone; income has a long right tail.
Answer: Weight over squared height approximates body mass, and a log compresses income.
<SEQ>f2/(f1*f1),log(f3)</SEQ>

Example 2
Features: f1 = distance, f2 = duration, f3 = passengers, f4 = fare
Direction: speed is the quantity that matters; compare fares per passenger.
Answer: Distance over duration is speed and fare over passengers normalizes trip size.
<SEQ>f1/f2,f4/f3,log(f1)</SEQ>";

fn operator_lines(out: &mut String, ops: &OperatorSet) {
    let binary: Vec<String> = ops
        .binary()
        .map(|op| format!("{} ({})", op.symbol(), op.name()))
        .collect();
    let unary: Vec<String> = ops.unary().map(|op| format!("{}(x)", op.name())).collect();
    writeln!(
        out,
        "{BINARY_PREFIX} {}",
        if binary.is_empty() {
            "none".to_string()
        } else {
            binary.join(", ")
        }
    )
    .unwrap();
    writeln!(
        out,
        "{UNARY_PREFIX} {}",
        if unary.is_empty() {
            "none".to_string()
        } else {
            unary.join(", ")
        }
    )
    .unwrap();
}

/// Generator prompt. The advice items are copied into the user text
/// unchanged.
pub fn build_generator_prompt(
    meta: &DatasetMeta,
    ops: &OperatorSet,
    advice: &CritiqueAdvice,
    features: &[FeatureEntry],
    k_max: usize,
) -> Prompt {
    let k_max = k_max.max(1);
    let mut system = String::new();
    system.push_str(GENERATOR_ROLE);
    system.push_str("\n\n");
    writeln!(system, "{FEATURES_HEADER}").unwrap();
    for (i, f) in features.iter().enumerate() {
        match &f.provenance {
            Provenance::Original => description_line(
                &mut system,
                i + 1,
                &f.name,
                meta.description_of(&f.name).unwrap_or(""),
            ),
            Provenance::Generated { .. } => {
                writeln!(system, "f{} = {} (generated)", i + 1, f.name).unwrap()
            }
        }
    }
    system.push('\n');
    system.push_str("Operators:\n");
    operator_lines(&mut system, ops);
    system.push('\n');
    system.push_str("Grammar:\n");
    system.push_str(GRAMMAR);
    system.push_str(
        "\nFEATURE is a token such as f3 and OPNAME is a unary operator name. There are no numeric \
         constants and no unary minus. Expressions nest at most 6 levels deep.\n\n",
    );
    writeln!(
        system,
        "A sequence lists the new features separated by commas, for example {SEQUENCE_EXEMPLAR}."
    )
    .unwrap();
    system.push('\n');
    system.push_str(FEW_SHOT);
    system.push_str(
        "\n\nExplain your choices briefly. The final line of your answer must be exactly one \
         sequence between <SEQ> and </SEQ>, using only the tokens and operators listed above.",
    );

    let mut user = String::new();
    user.push_str("Optimization direction:\n");
    if !advice.semantic_advice.is_empty() {
        writeln!(user, "{SEMANTIC_HEADER}").unwrap();
        for item in &advice.semantic_advice {
            writeln!(user, "- {item}").unwrap();
        }
    }
    if !advice.distributional_advice.is_empty() {
        writeln!(user, "{DISTRIBUTION_HEADER}").unwrap();
        for item in &advice.distributional_advice {
            writeln!(user, "- {item}").unwrap();
        }
    }
    user.push('\n');
    write!(
        user,
        "Propose at most {k_max} new feature{} that follow this direction.",
        if k_max == 1 { "" } else { "s" }
    )
    .unwrap();

    Prompt { system, user }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureDescription;
    use crate::diagnosis::summarize;
    use crate::expr::{parse, BinaryOp, UnaryOp};

    fn fixture() -> (DatasetMeta, FeatureTable) {
        let meta = DatasetMeta {
            task_description: "Predict whether a loan defaults.".into(),
            target_name: "default".into(),
            feature_descriptions: vec![
                FeatureDescription {
                    name: "income".into(),
                    description: "yearly earnings in dollars".into(),
                },
                FeatureDescription {
                    name: "debt".into(),
                    description: "amount still owed".into(),
                },
            ],
        };
        let table = FeatureTable::from_columns(
            vec!["income".into(), "debt".into(), "age".into()],
            vec![
                vec![1.0, 5.0, 3.0],
                vec![2.0, 1.0, 7.0],
                vec![30.0, 41.0, 52.0],
            ],
        )
        .unwrap();
        (meta, table)
    }

    #[test]
    fn critic_prompt_lists_each_name_once() {
        let (meta, table) = fixture();
        let p = build_critic_prompt(&meta, &summarize(&table), &FeatureEntry::from_table(&table));
        assert!(p.system.contains("SEMANTIC:") && p.system.contains("DISTRIBUTION:"));
        assert!(p.user.contains("Predict whether a loan defaults."));
        let block: String = p
            .user
            .lines()
            .skip_while(|l| *l != DESCRIPTIONS_HEADER)
            .skip(1)
            .take_while(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join("\n");
        for name in ["income", "debt", "age"] {
            assert_eq!(block.matches(name).count(), 1, "{name} in {block}");
        }
        assert!(block.contains("f3 = age\n") || block.ends_with("f3 = age"));
        assert!(p.user.contains("none yet"));
        assert!(p.user.contains(STATS_BLOCK_HEADER));
    }

    #[test]
    fn generated_features_are_listed() {
        let (meta, table) = fixture();
        let out = crate::dataset::apply_exprs(
            &table,
            parse("f1/f2", &OperatorSet::default()).unwrap().exprs(),
            &Default::default(),
            Some(1),
        );
        let p = build_critic_prompt(
            &meta,
            &summarize(&out.table),
            &FeatureEntry::from_table(&out.table),
        );
        assert!(p.user.contains("f4 = f1/f2 (round 1)"));
    }

    #[test]
    fn generator_prompt_contract() {
        let (meta, table) = fixture();
        let advice = CritiqueAdvice {
            semantic_advice: vec!["debt to income ratio (f2/f1) measures burden".into()],
            distributional_advice: vec!["f1 is right-skewed; take log(f1)".into()],
            raw_response: String::new(),
        };
        let ops = OperatorSet::new([BinaryOp::Mul, BinaryOp::Div], [UnaryOp::Log]).unwrap();
        let features = FeatureEntry::from_table(&table);
        let p = build_generator_prompt(&meta, &ops, &advice, &features, 4);
        assert!(p.system.contains(SEQUENCE_EXEMPLAR));
        assert!(p.system.contains("f1 = income: yearly earnings in dollars"));
        assert!(p.system.contains("binary operators: * (mul), / (div)"));
        assert!(p.system.contains("unary operators: log(x)"));
        assert!(p.system.matches("<SEQ>").count() >= 3);
        for item in advice.items() {
            assert!(p.user.contains(item));
        }
        assert!(p.user.contains("at most 4 new features"));
        assert_eq!(
            p,
            build_generator_prompt(&meta, &ops, &advice, &features, 4)
        );
    }

    #[test]
    fn few_shot_answers_parse() {
        for line in FEW_SHOT.lines().filter(|l| l.starts_with("<SEQ>")) {
            let inner = line.trim_start_matches("<SEQ>").trim_end_matches("</SEQ>");
            parse(inner, &OperatorSet::default()).unwrap();
        }
    }
}
