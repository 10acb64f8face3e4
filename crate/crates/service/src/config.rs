use std::path::{Path, PathBuf};

use duet_core::agents::{
    AgentConfig, BackendError, ChatBackend, HeuristicBackend, RemoteConfig, RemoteHttpBackend,
    ReplayBackend, ReplayMode, Transcript,
};
use duet_core::expr::OperatorSet;
use duet_core::refine::LoopConfig;
use serde::{Deserialize, Serialize};

/// Contents of the optional JSON config file. Every section may be omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub agents: AgentConfig,
    pub remote: RemoteConfig,
    #[serde(rename = "loop")]
    pub refine: LoopConfig,
    /// Operator names such as `["mul", "div", "log"]`; all when absent.
    pub operators: Option<Vec<String>>,
}

#[derive(Debug, thiserror::Error)]
pub enum SettingsError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid operator list: {0}")]
    Operators(String),
}

impl Settings {
    pub fn read(path: &Path) -> Result<Self, SettingsError> {
        let text = std::fs::read_to_string(path).map_err(|source| SettingsError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| SettingsError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, SettingsError> {
        path.map_or_else(|| Ok(Settings::default()), Settings::read)
    }

    pub fn operator_set(&self) -> Result<OperatorSet, SettingsError> {
        match &self.operators {
            None => Ok(OperatorSet::default()),
            Some(names) => OperatorSet::from_names(names.iter().map(String::as_str))
                .map_err(SettingsError::Operators),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Replay,
    Heuristic,
}

/// Builds a fresh chat backend on demand, e.g. one per HTTP session.
#[derive(Debug, Clone)]
pub struct BackendFactory {
    kind: BackendKind,
    remote: RemoteConfig,
    replay: Option<(Transcript, ReplayMode)>,
}

impl BackendFactory {
    pub fn heuristic() -> Self {
        BackendFactory {
            kind: BackendKind::Heuristic,
            remote: RemoteConfig::default(),
            replay: None,
        }
    }

    pub fn remote(config: RemoteConfig) -> Self {
        BackendFactory {
            kind: BackendKind::Remote,
            remote: config,
            replay: None,
        }
    }

    pub fn replay(transcript: Transcript, mode: ReplayMode) -> Self {
        BackendFactory {
            kind: BackendKind::Replay,
            remote: RemoteConfig::default(),
            replay: Some((transcript, mode)),
        }
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn build(&self) -> Result<Box<dyn ChatBackend>, BackendError> {
        Ok(match (self.kind, &self.replay) {
            (BackendKind::Heuristic, _) => Box::new(HeuristicBackend::new()),
            (BackendKind::Remote, _) => Box::new(RemoteHttpBackend::from_env(&self.remote)?),
            (BackendKind::Replay, Some((t, mode))) => {
                Box::new(ReplayBackend::new(t.clone(), *mode))
            }
            (BackendKind::Replay, None) => {
                Box::new(ReplayBackend::new(Transcript::new(), ReplayMode::Strict))
            }
        })
    }
}
