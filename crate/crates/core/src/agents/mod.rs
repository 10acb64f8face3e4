//! Critic and generator agents on top of a pluggable chat backend.
//!
//! The critic reads a label-free description of the feature space and
//! returns advice in two sections. The generator turns that advice into a
//! [`TransformSequence`](crate::expr::TransformSequence). Both talk to a
//! [`ChatBackend`]; every call is appended to a [`Transcript`].

mod heuristic;
mod parse;
mod prompts;
mod remote;
mod replay;
mod runner;
mod transcript;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use heuristic::HeuristicBackend;
pub use parse::{extract_sequence, parse_critique};
pub use prompts::{build_critic_prompt, build_generator_prompt, FeatureEntry, SEQUENCE_EXEMPLAR};
pub use remote::{RemoteConfig, RemoteHttpBackend, API_KEY_ENV};
pub use replay::{ReplayBackend, ReplayMode};
pub use runner::{run_critic, run_generator, Agents};
pub use transcript::{Transcript, TranscriptRecord};

use crate::expr::{ParseError, ParseLimits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Critic,
    Generator,
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentRole::Critic => "critic",
            AgentRole::Generator => "generator",
        })
    }
}

/// System and user text of one chat turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub role: AgentRole,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("http status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    InvalidResponse(String),
    #[error("environment variable {0} is not set")]
    MissingApiKey(&'static str),
    #[error("replay transcript exhausted after {consumed} records")]
    ReplayExhausted { consumed: usize },
    #[error("replay record {index} does not match the request: {detail}")]
    ReplayMismatch { index: usize, detail: String },
}

impl BackendError {
    /// Whether retrying the same request may succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            BackendError::Transport(_) | BackendError::Timeout => true,
            BackendError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait ChatBackend: Send {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, BackendError>;

    /// Short identifier used in logs and reports.
    fn name(&self) -> &str;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// The critic's answer, split into its two sections.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CritiqueAdvice {
    pub semantic_advice: Vec<String>,
    pub distributional_advice: Vec<String>,
    pub raw_response: String,
}

impl CritiqueAdvice {
    /// Advice that consists of a single semantic item, as used when a human
    /// takes the critic's place.
    pub fn instruction(text: &str) -> Self {
        CritiqueAdvice {
            semantic_advice: vec![text.trim().to_string()],
            distributional_advice: Vec::new(),
            raw_response: text.to_string(),
        }
    }

    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.semantic_advice
            .iter()
            .chain(&self.distributional_advice)
            .map(String::as_str)
    }

    pub fn item_count(&self) -> usize {
        self.semantic_advice.len() + self.distributional_advice.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub temperature_critic: f64,
    pub temperature_generator: f64,
    pub max_tokens: u32,
    /// Extra attempts after a transient backend failure.
    pub retries: u32,
    /// First backoff delay; doubles on every further attempt.
    pub backoff_base_ms: u64,
    /// Self-repair attempts after an unparseable generation.
    pub repair_attempts: u32,
    #[serde(skip)]
    pub limits: ParseLimits,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            temperature_critic: 0.7,
            temperature_generator: 0.2,
            max_tokens: 1024,
            retries: 3,
            backoff_base_ms: 500,
            repair_attempts: 2,
            limits: ParseLimits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("backend failed: {0}")]
    Backend(#[from] BackendError),
    #[error("critic returned an empty response")]
    EmptyCritique,
    #[error("generator output could not be parsed after {attempts} attempts: {error}")]
    GenerationUnparseable {
        attempts: u32,
        error: ParseError,
        response: String,
    },
}
