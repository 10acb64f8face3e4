use serde::{Deserialize, Serialize};

use crate::agents::{build_generator_prompt, AgentError, Agents, CritiqueAdvice, FeatureEntry};
use crate::dataset::{
    apply_exprs, apply_sequence, AcceptancePolicy, ApplyOutcome, DatasetMeta, FeatureTable,
    Rejection,
};
use crate::diagnosis::{summarize, FeatureStats};
use crate::expr::{render_expr, OperatorSet, TransformSequence};

/// Undo keeps at most this many earlier tables.
pub const MAX_HISTORY: usize = 50;

/// How one proposed expression would fare if accepted now.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePreview {
    pub position: usize,
    pub expr: String,
    /// Statistics of the column it would add, when it passes every check.
    pub stats: Option<FeatureStats>,
    pub rejection: Option<Rejection>,
}

/// A generated sequence waiting for the user to accept or discard it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub instruction: String,
    pub sequence: TransformSequence,
    pub preview: Vec<CandidatePreview>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConversationError {
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error("a proposal is already pending; accept or undo it first")]
    ProposalPending,
    #[error("there is no pending proposal")]
    NoProposal,
    #[error("index {index} is out of range for a proposal of {len} expressions")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("nothing to undo")]
    NothingToUndo,
    #[error(transparent)]
    Agent(#[from] AgentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndoOutcome {
    DiscardedProposal,
    RevertedTable,
}

/// State of a session where a person takes the critic's place.
///
/// `instruct` stages a proposal without touching the table; `accept`
/// applies a chosen subset of it; `undo` discards the pending proposal or,
/// if there is none, restores the table from before the last change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    table: FeatureTable,
    pending: Option<Proposal>,
    history: Vec<FeatureTable>,
    rounds: usize,
}

impl Conversation {
    pub fn new(table: FeatureTable) -> Self {
        Conversation {
            table,
            pending: None,
            history: Vec::new(),
            rounds: 0,
        }
    }

    pub fn table(&self) -> &FeatureTable {
        &self.table
    }

    pub fn pending(&self) -> Option<&Proposal> {
        self.pending.as_ref()
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Number of changes applied so far.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Runs the generator with `instruction` as the only advice and stages
    /// its answer.
    pub fn instruct(
        &mut self,
        instruction: &str,
        meta: &DatasetMeta,
        ops: &OperatorSet,
        k_max: usize,
        policy: &AcceptancePolicy,
        agents: &mut Agents,
    ) -> Result<&Proposal, ConversationError> {
        if instruction.trim().is_empty() {
            return Err(ConversationError::EmptyInstruction);
        }
        if self.pending.is_some() {
            return Err(ConversationError::ProposalPending);
        }
        let advice = CritiqueAdvice::instruction(instruction);
        let prompt = build_generator_prompt(
            meta,
            ops,
            &advice,
            &FeatureEntry::from_table(&self.table),
            k_max,
        );
        let sequence = agents.generate(&prompt, ops, k_max)?;
        let preview = preview(&self.table, &sequence, policy);
        Ok(self.pending.insert(Proposal {
            instruction: instruction.to_string(),
            sequence,
            preview,
        }))
    }

    /// Applies the pending expressions at `indices` (in the given order,
    /// duplicates ignored) and clears the proposal.
    pub fn accept(
        &mut self,
        indices: &[usize],
        policy: &AcceptancePolicy,
    ) -> Result<ApplyOutcome, ConversationError> {
        let proposal = self.pending.as_ref().ok_or(ConversationError::NoProposal)?;
        let exprs = proposal.sequence.exprs();
        let mut chosen = Vec::new();
        for &index in indices {
            let expr = exprs.get(index).ok_or(ConversationError::IndexOutOfRange {
                index,
                len: exprs.len(),
            })?;
            if !chosen.contains(expr) {
                chosen.push(expr.clone());
            }
        }
        let outcome = apply_exprs(&self.table, &chosen, policy, Some(self.rounds + 1));
        self.pending = None;
        self.replace_table(outcome.table.clone());
        Ok(outcome)
    }

    /// Swaps in a new table, keeping the current one for undo.
    pub fn replace_table(&mut self, table: FeatureTable) {
        let previous = std::mem::replace(&mut self.table, table);
        self.history.push(previous);
        if self.history.len() > MAX_HISTORY {
            self.history.remove(0);
        }
        self.rounds += 1;
    }

    pub fn undo(&mut self) -> Result<UndoOutcome, ConversationError> {
        if self.pending.take().is_some() {
            return Ok(UndoOutcome::DiscardedProposal);
        }
        let previous = self.history.pop().ok_or(ConversationError::NothingToUndo)?;
        self.table = previous;
        Ok(UndoOutcome::RevertedTable)
    }
}

fn preview(
    table: &FeatureTable,
    sequence: &TransformSequence,
    policy: &AcceptancePolicy,
) -> Vec<CandidatePreview> {
    let outcome = apply_sequence(table, sequence, policy);
    let summary = summarize(&outcome.table);
    let mut added = summary.features.into_iter().skip(table.n_cols());
    sequence
        .iter()
        .enumerate()
        .map(|(position, expr)| {
            let rejection = outcome
                .rejections
                .iter()
                .find(|r| r.position == position)
                .cloned();
            CandidatePreview {
                position,
                expr: render_expr(expr),
                stats: if rejection.is_none() {
                    added.next()
                } else {
                    None
                },
                rejection,
            }
        })
        .collect()
}
