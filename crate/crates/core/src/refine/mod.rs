//! The automatic critic/generator loop and its conversational variant.
//!
//! Nothing here takes labels. A round summarizes the current table, asks the
//! critic for advice, asks the generator for a sequence under that advice
//! and appends whatever survives [`apply_exprs`].

mod conversation;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use conversation::{
    CandidatePreview, Conversation, ConversationError, Proposal, UndoOutcome, MAX_HISTORY,
};

use crate::agents::{
    build_critic_prompt, build_generator_prompt, AgentError, Agents, CritiqueAdvice, FeatureEntry,
    Transcript,
};
use crate::dataset::{apply_exprs, AcceptancePolicy, DatasetMeta, FeatureTable, Rejection};
use crate::diagnosis::summarize;
use crate::expr::{render_fts, OperatorSet, TransformExpr, TransformSequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub iterations: usize,
    /// Most expressions taken from one generator answer.
    pub k_max: usize,
    pub budget_multiplier: usize,
    pub max_nan_fraction: f64,
    /// Recorded with the run; the loop itself draws no random numbers.
    pub seed: u64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        let policy = AcceptancePolicy::default();
        LoopConfig {
            iterations: 3,
            k_max: 10,
            budget_multiplier: policy.budget_multiplier,
            max_nan_fraction: policy.max_nan_fraction,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("iterations must be at least 1")]
    NoIterations,
    #[error("k_max must be at least 1")]
    NoProposals,
    #[error("budget multiplier must be at least 1")]
    NoBudget,
    #[error("max_nan_fraction must lie in [0, 1]")]
    NanFraction,
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.iterations == 0 {
            return Err(ConfigError::NoIterations);
        }
        if self.k_max == 0 {
            return Err(ConfigError::NoProposals);
        }
        if self.budget_multiplier == 0 {
            return Err(ConfigError::NoBudget);
        }
        if !(0.0..=1.0).contains(&self.max_nan_fraction) {
            return Err(ConfigError::NanFraction);
        }
        Ok(())
    }

    pub fn policy(&self) -> AcceptancePolicy {
        AcceptancePolicy {
            max_nan_fraction: self.max_nan_fraction,
            budget_multiplier: self.budget_multiplier,
            ..AcceptancePolicy::default()
        }
    }
}

/// Wall-clock seconds spent in each phase of a round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub diagnosis: f64,
    pub critic: f64,
    pub generator: f64,
    pub apply: f64,
}

impl PhaseTimings {
    pub fn backend(&self) -> f64 {
        self.critic + self.generator
    }

    pub fn total(&self) -> f64 {
        self.diagnosis + self.critic + self.generator + self.apply
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based round number, also stored in each accepted column's provenance.
    pub index: usize,
    pub advice: Option<CritiqueAdvice>,
    pub proposed: Option<TransformSequence>,
    pub accepted: Vec<TransformExpr>,
    pub rejections: Vec<Rejection>,
    /// Rows and columns after the round.
    pub shape: (usize, usize),
    /// Why the round produced nothing, if it was skipped.
    pub skipped: Option<String>,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub table: FeatureTable,
    pub iterations: Vec<IterationRecord>,
    /// Backend calls made during this run.
    pub transcript: Transcript,
    pub config: LoopConfig,
}

impl RunResult {
    /// Accepted expressions, one line per round that accepted any.
    pub fn sequences_fts(&self) -> String {
        let seqs: Vec<TransformSequence> = self
            .iterations
            .iter()
            .filter_map(|r| TransformSequence::new(r.accepted.clone()))
            .collect();
        render_fts(&seqs)
    }

    pub fn iterations_json(&self) -> String {
        #[derive(Serialize)]
        struct Log<'a> {
            config: &'a LoopConfig,
            iterations: &'a [IterationRecord],
        }
        serde_json::to_string_pretty(&Log {
            config: &self.config,
            iterations: &self.iterations,
        })
        .expect("iteration log serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// The backend failed for good; rounds completed so far are kept.
    #[error("round {round} failed: {error}")]
    Backend {
        round: usize,
        error: AgentError,
        partial: Box<RunResult>,
    },
}

fn seconds(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Runs `cfg.iterations` critic/generator rounds over `table`.
///
/// An unusable critic or generator answer skips the round; a backend
/// failure ends the run and returns the rounds completed so far.
pub fn run(
    table: &FeatureTable,
    meta: &DatasetMeta,
    ops: &OperatorSet,
    cfg: &LoopConfig,
    agents: &mut Agents,
) -> Result<RunResult, RunError> {
    cfg.validate()?;
    let policy = cfg.policy();
    let transcript_start = agents.transcript().len();
    let mut current = table.clone();
    let mut iterations = Vec::with_capacity(cfg.iterations);

    for index in 1..=cfg.iterations {
        let mut timings = PhaseTimings::default();
        let mut record = IterationRecord {
            index,
            advice: None,
            proposed: None,
            accepted: Vec::new(),
            rejections: Vec::new(),
            shape: (current.n_rows(), current.n_cols()),
            skipped: None,
            timings,
        };

        let clock = Instant::now();
        let entries = FeatureEntry::from_table(&current);
        let critic_prompt = build_critic_prompt(meta, &summarize(&current), &entries);
        timings.diagnosis = seconds(clock.elapsed());

        let clock = Instant::now();
        let critique = agents.critique(&critic_prompt);
        timings.critic = seconds(clock.elapsed());
        let advice = match critique {
            Ok(a) => a,
            Err(error @ AgentError::Backend(_)) => {
                record.timings = timings;
                iterations.push(record);
                return Err(failure(
                    index,
                    error,
                    current,
                    iterations,
                    agents,
                    transcript_start,
                    cfg,
                ));
            }
            Err(other) => {
                record.skipped = Some(other.to_string());
                record.timings = timings;
                iterations.push(record);
                continue;
            }
        };

        let clock = Instant::now();
        let generator_prompt = build_generator_prompt(meta, ops, &advice, &entries, cfg.k_max);
        let generated = agents.generate(&generator_prompt, ops, cfg.k_max);
        timings.generator = seconds(clock.elapsed());
        record.advice = Some(advice);
        let seq = match generated {
            Ok(s) => s,
            Err(error @ AgentError::Backend(_)) => {
                record.timings = timings;
                iterations.push(record);
                return Err(failure(
                    index,
                    error,
                    current,
                    iterations,
                    agents,
                    transcript_start,
                    cfg,
                ));
            }
            Err(other) => {
                record.skipped = Some(other.to_string());
                record.timings = timings;
                iterations.push(record);
                continue;
            }
        };

        let clock = Instant::now();
        let outcome = apply_exprs(&current, seq.exprs(), &policy, Some(index));
        timings.apply = seconds(clock.elapsed());
        current = outcome.table;
        record.proposed = Some(seq);
        record.accepted = outcome.accepted;
        record.rejections = outcome.rejections;
        record.shape = (current.n_rows(), current.n_cols());
        record.timings = timings;
        iterations.push(record);
    }

    Ok(RunResult {
        table: current,
        iterations,
        transcript: Transcript::from(agents.transcript().records()[transcript_start..].to_vec()),
        config: cfg.clone(),
    })
}

fn failure(
    round: usize,
    error: AgentError,
    table: FeatureTable,
    iterations: Vec<IterationRecord>,
    agents: &Agents,
    transcript_start: usize,
    cfg: &LoopConfig,
) -> RunError {
    RunError::Backend {
        round,
        error,
        partial: Box::new(RunResult {
            table,
            iterations,
            transcript: Transcript::from(
                agents.transcript().records()[transcript_start..].to_vec(),
            ),
            config: cfg.clone(),
        }),
    }
}
