use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendError, ChatBackend, ChatRequest};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "DUET_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub model: String,
    /// Base of an OpenAI-compatible API; `/chat/completions` is appended.
    pub base_url: String,
    pub timeout_secs: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            model: "gpt-3.5-turbo".into(),
            base_url: "https://api.openai.com/v1".into(),
            timeout_secs: 60,
        }
    }
}

/// Chat-completions client. One blocking request per call.
pub struct RemoteHttpBackend {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: String,
}

impl RemoteHttpBackend {
    pub fn new(config: &RemoteConfig, api_key: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteHttpBackend {
            agent,
            endpoint: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            model: config.model.clone(),
            api_key: api_key.into(),
        }
    }

    /// Reads the key from [`API_KEY_ENV`].
    pub fn from_env(config: &RemoteConfig) -> Result<Self, BackendError> {
        match std::env::var(API_KEY_ENV) {
            Ok(key) if !key.trim().is_empty() => Ok(RemoteHttpBackend::new(config, key.trim())),
            _ => Err(BackendError::MissingApiKey(API_KEY_ENV)),
        }
    }
}

fn transport(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::Timeout(_) => BackendError::Timeout,
        other => BackendError::Transport(other.to_string()),
    }
}

fn content(body: &str) -> Result<String, BackendError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::InvalidResponse("missing choices[0].message.content".into()))
}

impl ChatBackend for RemoteHttpBackend {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, BackendError> {
        let body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(transport)?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(transport)?;
        if !(200..300).contains(&status) {
            let mut snippet: String = text.chars().take(200).collect();
            if snippet.len() < text.len() {
                snippet.push_str("...");
            }
            return Err(BackendError::Http {
                status,
                body: snippet,
            });
        }
        content(&text)
    }

    fn name(&self) -> &str {
        "remote"
    }
}
