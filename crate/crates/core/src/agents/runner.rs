use std::thread;
use std::time::Duration;

use super::{
    extract_sequence, parse_critique, AgentConfig, AgentError, AgentRole, BackendError,
    ChatBackend, ChatRequest, CritiqueAdvice, Prompt, Transcript,
};
use crate::expr::{OperatorSet, TransformSequence};

const CRITIC_REMINDER: &str = "\n\nYour answer must contain the two sections `SEMANTIC:` and \
`DISTRIBUTION:`, each followed by bullet points starting with `- `.";

/// Sends one request, retrying transient failures with exponential
/// backoff. Successful calls are appended to `transcript`.
fn call(
    backend: &mut dyn ChatBackend,
    role: AgentRole,
    system: &str,
    user: &str,
    config: &AgentConfig,
    transcript: &mut Transcript,
) -> Result<String, BackendError> {
    let request = ChatRequest {
        role,
        system: system.to_string(),
        user: user.to_string(),
        temperature: match role {
            AgentRole::Critic => config.temperature_critic,
            AgentRole::Generator => config.temperature_generator,
        },
        max_tokens: config.max_tokens,
    };
    let mut attempt = 0;
    loop {
        match backend.complete(&request) {
            Ok(text) => {
                transcript.push(role, system, user, &text);
                return Ok(text);
            }
            Err(e) if e.is_transient() && attempt < config.retries => {
                let delay = config.backoff_base_ms.saturating_mul(1 << attempt.min(16));
                if delay > 0 {
                    thread::sleep(Duration::from_millis(delay));
                }
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Asks the critic for advice. A response without section headers is
/// retried once with a reminder of the format; if that also fails, the
/// whole response becomes a single semantic item.
pub fn run_critic(
    backend: &mut dyn ChatBackend,
    prompt: &Prompt,
    config: &AgentConfig,
    transcript: &mut Transcript,
) -> Result<CritiqueAdvice, AgentError> {
    let first = call(
        backend,
        AgentRole::Critic,
        &prompt.system,
        &prompt.user,
        config,
        transcript,
    )?;
    if let Some(advice) = parse_critique(&first) {
        return Ok(advice);
    }
    let user = format!("{}{CRITIC_REMINDER}", prompt.user);
    let second = call(
        backend,
        AgentRole::Critic,
        &prompt.system,
        &user,
        config,
        transcript,
    )?;
    if let Some(advice) = parse_critique(&second) {
        return Ok(advice);
    }
    let raw = if second.trim().is_empty() {
        first
    } else {
        second
    };
    if raw.trim().is_empty() {
        return Err(AgentError::EmptyCritique);
    }
    Ok(CritiqueAdvice {
        semantic_advice: vec![raw.trim().to_string()],
        distributional_advice: Vec::new(),
        raw_response: raw,
    })
}

/// Asks the generator for a sequence, feeding parser errors back for up to
/// `config.repair_attempts` more tries. The result holds at most `k_max`
/// expressions.
pub fn run_generator(
    backend: &mut dyn ChatBackend,
    prompt: &Prompt,
    ops: &OperatorSet,
    k_max: usize,
    config: &AgentConfig,
    transcript: &mut Transcript,
) -> Result<TransformSequence, AgentError> {
    let mut user = prompt.user.clone();
    let mut attempts = 0;
    loop {
        attempts += 1;
        let response = call(
            backend,
            AgentRole::Generator,
            &prompt.system,
            &user,
            config,
            transcript,
        )?;
        match extract_sequence(&response, ops, config.limits) {
            Ok(mut seq) => {
                seq.truncate(k_max.max(1));
                return Ok(seq);
            }
            Err(error) if attempts > config.repair_attempts => {
                return Err(AgentError::GenerationUnparseable {
                    attempts,
                    error,
                    response,
                })
            }
            Err(error) => {
                user = format!(
                    "{}\n\nYour previous answer could not be used: {error}. Answer again and end with \
                     exactly one valid sequence inside <SEQ></SEQ>.",
                    prompt.user
                );
            }
        }
    }
}

/// A backend together with its settings and the transcript of every call.
pub struct Agents {
    backend: Box<dyn ChatBackend>,
    config: AgentConfig,
    transcript: Transcript,
}

impl Agents {
    pub fn new(backend: Box<dyn ChatBackend>, config: AgentConfig) -> Self {
        Agents {
            backend,
            config,
            transcript: Transcript::new(),
        }
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn take_transcript(&mut self) -> Transcript {
        std::mem::take(&mut self.transcript)
    }

    pub fn critique(&mut self, prompt: &Prompt) -> Result<CritiqueAdvice, AgentError> {
        run_critic(
            self.backend.as_mut(),
            prompt,
            &self.config,
            &mut self.transcript,
        )
    }

    pub fn generate(
        &mut self,
        prompt: &Prompt,
        ops: &OperatorSet,
        k_max: usize,
    ) -> Result<TransformSequence, AgentError> {
        run_generator(
            self.backend.as_mut(),
            prompt,
            ops,
            k_max,
            &self.config,
            &mut self.transcript,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Returns scripted results in order.
    struct Scripted(Vec<Result<String, BackendError>>, Vec<String>);

    impl ChatBackend for Scripted {
        fn complete(&mut self, request: &ChatRequest) -> Result<String, BackendError> {
            self.1.push(request.user.clone());
            self.0.remove(0)
        }

        fn name(&self) -> &str {
            "scripted"
        }
    }

    fn scripted(replies: &[Result<&str, BackendError>]) -> Scripted {
        Scripted(
            replies
                .iter()
                .map(|r| r.clone().map(str::to_string))
                .collect(),
            Vec::new(),
        )
    }

    fn config() -> AgentConfig {
        AgentConfig {
            backoff_base_ms: 0,
            ..Default::default()
        }
    }

    fn prompt() -> Prompt {
        Prompt {
            system: "sys".into(),
            user: "usr".into(),
        }
    }

    #[test]
    fn critic_degrades_after_one_retry() {
        let mut b = scripted(&[Ok("just prose"), Ok("still prose")]);
        let mut t = Transcript::new();
        let advice = run_critic(&mut b, &prompt(), &config(), &mut t).unwrap();
        assert_eq!(advice.semantic_advice, vec!["still prose"]);
        assert!(advice.distributional_advice.is_empty());
        assert_eq!(t.len(), 2);
        assert!(b.1[1].ends_with(CRITIC_REMINDER));
    }

    #[test]
    fn critic_retry_can_succeed() {
        let mut b = scripted(&[Ok("prose"), Ok("SEMANTIC:\n- a\nDISTRIBUTION:\n- b")]);
        let advice = run_critic(&mut b, &prompt(), &config(), &mut Transcript::new()).unwrap();
        assert_eq!(advice.item_count(), 2);
    }

    #[test]
    fn empty_critique_is_an_error() {
        let mut b = scripted(&[Ok(""), Ok("  ")]);
        let err = run_critic(&mut b, &prompt(), &config(), &mut Transcript::new()).unwrap_err();
        assert_eq!(err, AgentError::EmptyCritique);
    }

    #[test]
    fn transient_errors_are_retried() {
        let mut b = scripted(&[
            Err(BackendError::Timeout),
            Err(BackendError::Http {
                status: 500,
                body: String::new(),
            }),
            Ok("<SEQ>f1*f2</SEQ>"),
        ]);
        let mut t = Transcript::new();
        let seq = run_generator(
            &mut b,
            &prompt(),
            &OperatorSet::default(),
            5,
            &config(),
            &mut t,
        )
        .unwrap();
        assert_eq!(seq.to_string(), "f1*f2");
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn retries_are_bounded_and_permanent_errors_fail_fast() {
        let mut b = scripted(&[
            Err(BackendError::Timeout),
            Err(BackendError::Timeout),
            Err(BackendError::Timeout),
            Err(BackendError::Timeout),
        ]);
        let err = run_critic(&mut b, &prompt(), &config(), &mut Transcript::new()).unwrap_err();
        assert_eq!(err, AgentError::Backend(BackendError::Timeout));
        assert!(b.0.is_empty());

        let mut b = scripted(&[Err(BackendError::MissingApiKey("K")), Ok("unused")]);
        assert!(run_critic(&mut b, &prompt(), &config(), &mut Transcript::new()).is_err());
        assert_eq!(b.0.len(), 1);
    }

    #[test]
    fn generator_self_repair() {
        let mut b = scripted(&[Ok("<SEQ>f1**f2</SEQ>"), Ok("<SEQ>f1*f2,log(f3)</SEQ>")]);
        let mut t = Transcript::new();
        let seq = run_generator(
            &mut b,
            &prompt(),
            &OperatorSet::default(),
            5,
            &config(),
            &mut t,
        )
        .unwrap();
        assert_eq!(seq.len(), 2);
        assert!(b.1[1].starts_with("usr\n\nYour previous answer could not be used: at offset 3"));
    }

    #[test]
    fn generator_gives_up() {
        let mut b = scripted(&[Ok("nope"), Ok("<SEQ>f0</SEQ>"), Ok("<SEQ>(</SEQ>")]);
        let err = run_generator(
            &mut b,
            &prompt(),
            &OperatorSet::default(),
            5,
            &config(),
            &mut Transcript::new(),
        )
        .unwrap_err();
        match err {
            AgentError::GenerationUnparseable {
                attempts, response, ..
            } => {
                assert_eq!(attempts, 3);
                assert_eq!(response, "<SEQ>(</SEQ>");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncates_to_k_max() {
        let mut b = scripted(&[Ok("<SEQ>f1,f2,f3,f4</SEQ>")]);
        let seq = run_generator(
            &mut b,
            &prompt(),
            &OperatorSet::default(),
            2,
            &config(),
            &mut Transcript::new(),
        )
        .unwrap();
        assert_eq!(seq.to_string(), "f1,f2");
    }
}
