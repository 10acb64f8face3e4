use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use duet_core::agents::{Agents, CritiqueAdvice};
use duet_core::dataset::{DatasetMeta, FeatureTable, Labels, Provenance};
use duet_core::diagnosis::{summarize, Summary};
use duet_core::expr::render_expr;
use duet_core::refine::{CandidatePreview, Conversation, Proposal};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

pub const DEFAULT_TTL: Duration = Duration::from_secs(3600);

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// A random 128-bit id as 32 lowercase hex digits.
pub fn new_session_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    Advice,
    Instruction,
    Proposal,
    Accepted,
    Undo,
    Auto,
}

/// One line of a session's chat history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub kind: LogKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exprs: Vec<String>,
    pub ts: u64,
}

/// Everything about a session that survives a restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionData {
    pub id: String,
    pub created_at: u64,
    pub meta: DatasetMeta,
    pub labels: Labels,
    pub conversation: Conversation,
    pub advice: Option<CritiqueAdvice>,
    pub log: Vec<LogEntry>,
}

impl SessionData {
    pub fn new(meta: DatasetMeta, table: FeatureTable, labels: Labels) -> Self {
        SessionData {
            id: new_session_id(),
            created_at: now_ms(),
            meta,
            labels,
            conversation: Conversation::new(table),
            advice: None,
            log: Vec::new(),
        }
    }

    pub fn table(&self) -> &FeatureTable {
        self.conversation.table()
    }

    pub fn log(&mut self, kind: LogKind, text: impl Into<String>, exprs: Vec<String>) {
        self.log.push(LogEntry {
            kind,
            text: text.into(),
            exprs,
            ts: now_ms(),
        });
    }

    pub fn snapshot(&self, backend: &str) -> SessionSnapshot {
        SessionSnapshot {
            session_id: self.id.clone(),
            created_at: self.created_at,
            backend: backend.to_string(),
            target: self.meta.target_name.clone(),
            rows: self.table().n_rows(),
            columns: columns_view(self.table(), &self.meta),
            stats: summarize(self.table()),
            pending: self.conversation.pending().map(ProposalView::from),
            advice: self.advice.clone(),
            history_depth: self.conversation.history_len(),
            rounds: self.conversation.rounds(),
            log: self.log.clone(),
        }
    }
}

/// A live session: its data plus the agents bound to it.
pub struct Session {
    pub data: SessionData,
    pub agents: Agents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnView {
    pub index: usize,
    pub token: String,
    pub name: String,
    pub generated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

pub fn columns_view(table: &FeatureTable, meta: &DatasetMeta) -> Vec<ColumnView> {
    table
        .columns()
        .iter()
        .enumerate()
        .map(|(index, c)| {
            let (expr, round) = match &c.provenance {
                Provenance::Original => (None, None),
                Provenance::Generated { expr, round } => (Some(render_expr(expr)), *round),
            };
            ColumnView {
                index,
                token: format!("f{}", index + 1),
                name: c.name.clone(),
                generated: expr.is_some(),
                description: meta
                    .description_of(&c.name)
                    .filter(|d| !d.is_empty() && expr.is_none())
                    .map(str::to_string),
                expr,
                round,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalView {
    pub instruction: String,
    /// Canonical renderings, in proposal order; `accept` indexes into this.
    pub exprs: Vec<String>,
    pub preview: Vec<CandidatePreview>,
}

impl From<&Proposal> for ProposalView {
    fn from(p: &Proposal) -> Self {
        ProposalView {
            instruction: p.instruction.clone(),
            exprs: p.sequence.iter().map(render_expr).collect(),
            preview: p.preview.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub created_at: u64,
    pub backend: String,
    pub target: String,
    pub rows: usize,
    pub columns: Vec<ColumnView>,
    pub stats: Summary,
    pub pending: Option<ProposalView>,
    pub advice: Option<CritiqueAdvice>,
    pub history_depth: usize,
    pub rounds: usize,
    pub log: Vec<LogEntry>,
}

pub type SessionSlot = Arc<Mutex<Session>>;

struct Entry {
    slot: SessionSlot,
    last_used: AtomicU64,
}

/// In-memory sessions with idle expiry.
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Entry>>,
    ttl: Duration,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        SessionStore {
            sessions: RwLock::new(HashMap::new()),
            ttl,
        }
    }

    pub fn insert(&self, session: Session) -> String {
        let id = session.data.id.clone();
        let entry = Entry {
            slot: Arc::new(Mutex::new(session)),
            last_used: AtomicU64::new(now_ms()),
        };
        self.sessions.write().unwrap().insert(id.clone(), entry);
        id
    }

    /// Looks up a live session and marks it used.
    pub fn get(&self, id: &str) -> Option<SessionSlot> {
        let now = now_ms();
        {
            let sessions = self.sessions.read().unwrap();
            let entry = sessions.get(id)?;
            if !self.expired(entry, now) {
                entry.last_used.store(now, Ordering::Relaxed);
                return Some(entry.slot.clone());
            }
        }
        self.sessions.write().unwrap().remove(id);
        None
    }

    pub fn remove(&self, id: &str) -> bool {
        self.sessions.write().unwrap().remove(id).is_some()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn expired(&self, entry: &Entry, now: u64) -> bool {
        now.saturating_sub(entry.last_used.load(Ordering::Relaxed)) > self.ttl.as_millis() as u64
    }

    /// Drops sessions idle for longer than the TTL; returns how many.
    pub fn sweep(&self) -> usize {
        let now = now_ms();
        let mut sessions = self.sessions.write().unwrap();
        let before = sessions.len();
        sessions.retain(|_, e| !self.expired(e, now));
        before - sessions.len()
    }

    /// Data of every session, waiting for in-flight requests to finish.
    pub async fn export(&self) -> Vec<SessionData> {
        let slots: Vec<SessionSlot> = self
            .sessions
            .read()
            .unwrap()
            .values()
            .map(|e| e.slot.clone())
            .collect();
        let mut out = Vec::with_capacity(slots.len());
        for slot in slots {
            out.push(slot.lock().await.data.clone());
        }
        out.sort_by_key(|d| d.created_at);
        out
    }
}

pub async fn write_snapshot(store: &SessionStore, path: &Path) -> std::io::Result<usize> {
    let data = store.export().await;
    let json = serde_json::to_string(&data).map_err(std::io::Error::other)?;
    std::fs::write(path, json)?;
    Ok(data.len())
}

pub fn read_snapshot(path: &Path) -> std::io::Result<Vec<SessionData>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(std::io::Error::other)
}
