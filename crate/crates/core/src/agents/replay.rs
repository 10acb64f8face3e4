use std::io;
use std::path::Path;

use super::{BackendError, ChatBackend, ChatRequest, Transcript, TranscriptRecord};

/// How closely a replayed request must match its recorded counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplayMode {
    /// Only the role must match.
    #[default]
    Lenient,
    /// Role, system and user text must all match.
    Strict,
}

/// Answers requests with the responses of a recorded transcript, in order.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    records: Vec<TranscriptRecord>,
    cursor: usize,
    mode: ReplayMode,
}

impl ReplayBackend {
    pub fn new(transcript: Transcript, mode: ReplayMode) -> Self {
        ReplayBackend {
            records: transcript.records().to_vec(),
            cursor: 0,
            mode,
        }
    }

    pub fn read(path: impl AsRef<Path>, mode: ReplayMode) -> io::Result<Self> {
        Ok(ReplayBackend::new(Transcript::read(path)?, mode))
    }

    pub fn remaining(&self) -> usize {
        self.records.len() - self.cursor
    }
}

fn first_difference(a: &str, b: &str) -> usize {
    a.bytes().zip(b.bytes()).take_while(|(x, y)| x == y).count()
}

impl ChatBackend for ReplayBackend {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, BackendError> {
        let index = self.cursor;
        let record = self
            .records
            .get(index)
            .ok_or(BackendError::ReplayExhausted { consumed: index })?;
        if record.role != request.role {
            return Err(BackendError::ReplayMismatch {
                index,
                detail: format!("recorded role {}, requested {}", record.role, request.role),
            });
        }
        if self.mode == ReplayMode::Strict {
            for (field, recorded, asked) in [
                ("system", &record.system, &request.system),
                ("user", &record.user, &request.user),
            ] {
                if recorded != asked {
                    return Err(BackendError::ReplayMismatch {
                        index,
                        detail: format!(
                            "{field} prompt differs at byte {}",
                            first_difference(recorded, asked)
                        ),
                    });
                }
            }
        }
        self.cursor += 1;
        Ok(record.response.clone())
    }

    fn name(&self) -> &str {
        "replay"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentRole;

    fn request(role: AgentRole, user: &str) -> ChatRequest {
        ChatRequest {
            role,
            system: "s".into(),
            user: user.into(),
            temperature: 0.0,
            max_tokens: 10,
        }
    }

    fn transcript() -> Transcript {
        let mut t = Transcript::new();
        t.push(AgentRole::Critic, "s", "u1", "first");
        t.push(AgentRole::Generator, "s", "u2", "second");
        t
    }

    #[test]
    fn replays_in_order_then_fails() {
        let mut b = ReplayBackend::new(transcript(), ReplayMode::Lenient);
        assert_eq!(
            b.complete(&request(AgentRole::Critic, "other")).unwrap(),
            "first"
        );
        assert_eq!(
            b.complete(&request(AgentRole::Generator, "x")).unwrap(),
            "second"
        );
        assert_eq!(
            b.complete(&request(AgentRole::Critic, "u1")),
            Err(BackendError::ReplayExhausted { consumed: 2 })
        );
    }

    #[test]
    fn role_mismatch() {
        let mut b = ReplayBackend::new(transcript(), ReplayMode::Lenient);
        let err = b
            .complete(&request(AgentRole::Generator, "u1"))
            .unwrap_err();
        assert!(matches!(err, BackendError::ReplayMismatch { index: 0, .. }));
        assert_eq!(b.remaining(), 2);
    }

    #[test]
    fn strict_compares_prompts() {
        let mut b = ReplayBackend::new(transcript(), ReplayMode::Strict);
        let err = b.complete(&request(AgentRole::Critic, "u9")).unwrap_err();
        assert_eq!(
            err.to_string(),
            "replay record 0 does not match the request: user prompt differs at byte 1"
        );
        assert_eq!(
            b.complete(&request(AgentRole::Critic, "u1")).unwrap(),
            "first"
        );
    }
}
