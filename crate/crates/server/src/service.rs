//! Session registry, membership and fan-out of sequenced operations.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};
use translucent_core::corpus::CorpusError;
use translucent_core::graph::{corpus_graph, ConnectionGraph};
use translucent_core::sync::{FileSink, LogError, ReplayError, SubmitError, LOG_FILE};
use translucent_core::translucence::VizConfig;
use translucent_core::wire::{ServerMessage, PROTOCOL_VERSION};
use translucent_core::workspace::WorkspaceConfig;
use translucent_core::{
    Condition, Corpus, Document, Operation, Role, SessionCore, SessionHeader, Snapshot, Submitted,
};

pub const DEFAULT_TIMER_MINUTES: u32 = 30;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown corpus `{0}`")]
    UnknownCorpus(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` already exists")]
    SessionExists(String),
    #[error("invalid session id `{0}`")]
    InvalidSessionId(String),
    #[error("{0} is already connected to this session")]
    RoleTaken(Role),
    #[error("protocol version {0} is not supported")]
    UnsupportedVersion(u32),
    #[error("not a member of this session")]
    NotMember,
    #[error("operation actor {actor} does not match connection role {role}")]
    ActorMismatch { actor: Role, role: Role },
    #[error("invalid or missing token")]
    BadToken,
    #[error("document `{0}` not found")]
    UnknownDocument(String),
    #[error("document `{doc_id}` is not available to {role}")]
    Forbidden { doc_id: String, role: Role },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Protocol(String),
    #[error(transparent)]
    Submit(#[from] SubmitError),
    #[error("corpus `{path}`: {source}")]
    Corpus {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("session `{session}`: {source}")]
    Log {
        session: String,
        #[source]
        source: LogError,
    },
    #[error("session `{session}`: {source}")]
    Recover {
        session: String,
        #[source]
        source: ReplayError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSession {
    pub corpus_id: String,
    pub condition: Condition,
    #[serde(default)]
    pub session_id: Option<String>,
    #[serde(default)]
    pub workspace: Option<WorkspaceConfig>,
    #[serde(default)]
    pub viz: Option<VizConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub corpus_id: String,
    pub condition: Condition,
    pub seq: u64,
    pub connected: Vec<Role>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub corpus_id: String,
    pub cases: usize,
    pub documents: usize,
    pub people: usize,
}

struct Member {
    conn_id: u64,
    tx: UnboundedSender<ServerMessage>,
}

struct LiveSession {
    core: Mutex<SessionCore>,
    members: Mutex<BTreeMap<Role, Member>>,
    /// Bearer tokens issued on join; they stay valid for the process lifetime.
    tokens: Mutex<HashMap<String, Role>>,
}

impl LiveSession {
    fn new(core: SessionCore) -> Self {
        Self {
            core: Mutex::new(core),
            members: Mutex::new(BTreeMap::new()),
            tokens: Mutex::new(HashMap::new()),
        }
    }

    fn notify_others(&self, except: Role, msg: ServerMessage) {
        for (role, m) in self.members.lock().iter() {
            if *role != except {
                let _ = m.tx.send(msg.clone());
            }
        }
    }
}

/// A joined connection: its role, a token for the document endpoints and
/// the stream of messages addressed to it.
pub struct Membership {
    pub session_id: String,
    pub role: Role,
    pub conn_id: u64,
    pub token: String,
    pub rx: UnboundedReceiver<ServerMessage>,
}

impl std::fmt::Debug for Membership {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Membership")
            .field("session_id", &self.session_id)
            .field("role", &self.role)
            .field("conn_id", &self.conn_id)
            .finish_non_exhaustive()
    }
}

#[derive(Clone)]
pub struct SessionService {
    corpora: Arc<BTreeMap<String, Arc<Corpus>>>,
    sessions: Arc<RwLock<BTreeMap<String, Arc<LiveSession>>>>,
    data_dir: Arc<PathBuf>,
    timer_minutes: u32,
    next_conn: Arc<AtomicU64>,
}

fn valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Loads every corpus under `root`: the directory itself if it holds a
/// manifest, otherwise each immediate subdirectory that does.
pub fn load_corpora(root: &Path) -> Result<BTreeMap<String, Arc<Corpus>>, ServiceError> {
    let corpus_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ServiceError::Corpus { path, source }
    };
    let mut corpora = BTreeMap::new();
    if root.join(translucent_core::corpus::MANIFEST_FILE).exists() {
        let corpus = Corpus::load(root).map_err(corpus_err(root))?;
        corpora.insert(corpus.id().to_string(), Arc::new(corpus));
        return Ok(corpora);
    }
    let entries = fs::read_dir(root).map_err(|source| ServiceError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut dirs: Vec<PathBuf> = entries.filter_map(Result::ok).map(|e| e.path()).collect();
    dirs.sort();
    for dir in dirs {
        if dir.join(translucent_core::corpus::MANIFEST_FILE).exists() {
            let corpus = Corpus::load(&dir).map_err(corpus_err(&dir))?;
            corpora.insert(corpus.id().to_string(), Arc::new(corpus));
        }
    }
    Ok(corpora)
}

impl SessionService {
    /// Loads corpora and recovers every session persisted under `data_dir`.
    pub fn open(
        corpus_root: &Path,
        data_dir: &Path,
        timer_minutes: u32,
    ) -> Result<Self, ServiceError> {
        let corpora = load_corpora(corpus_root)?;
        fs::create_dir_all(data_dir).map_err(|source| ServiceError::Io {
            path: data_dir.to_path_buf(),
            source,
        })?;
        let service = Self {
            corpora: Arc::new(corpora),
            sessions: Arc::new(RwLock::new(BTreeMap::new())),
            data_dir: Arc::new(data_dir.to_path_buf()),
            timer_minutes,
            next_conn: Arc::new(AtomicU64::new(1)),
        };
        service.recover_all()?;
        Ok(service)
    }

    fn recover_all(&self) -> Result<(), ServiceError> {
        let entries = fs::read_dir(self.data_dir.as_path()).map_err(|source| ServiceError::Io {
            path: self.data_dir.to_path_buf(),
            source,
        })?;
        let mut sessions = self.sessions.write();
        for entry in entries.filter_map(Result::ok) {
            let dir = entry.path();
            if !dir.join(LOG_FILE).exists() {
                continue;
            }
            let name = entry.file_name().to_string_lossy().into_owned();
            let (log, sink) = FileSink::open(&dir).map_err(|source| ServiceError::Log {
                session: name.clone(),
                source,
            })?;
            let corpus = self
                .corpora
                .get(&log.header.corpus_id)
                .cloned()
                .ok_or_else(|| ServiceError::UnknownCorpus(log.header.corpus_id.clone()))?;
            let session_id = log.header.session_id.clone();
            let core = SessionCore::recover(log, corpus, Box::new(sink)).map_err(|source| {
                ServiceError::Recover {
                    session: name,
                    source,
                }
            })?;
            tracing::info!(session = %session_id, seq = core.applied_seq(), "recovered session");
            sessions.insert(session_id, Arc::new(LiveSession::new(core)));
        }
        Ok(())
    }

    pub fn corpora(&self) -> Vec<CorpusSummary> {
        self.corpora
            .values()
            .map(|c| CorpusSummary {
                corpus_id: c.id().to_string(),
                cases: c.manifest().cases.len(),
                documents: c.documents().len(),
                people: c.gazetteer().len(),
            })
            .collect()
    }

    fn session(&self, id: &str) -> Result<Arc<LiveSession>, ServiceError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn create_session(&self, req: CreateSession) -> Result<SessionSummary, ServiceError> {
        let corpus = self
            .corpora
            .get(&req.corpus_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownCorpus(req.corpus_id.clone()))?;
        let session_id = req
            .session_id
            .unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
        if !valid_session_id(&session_id) {
            return Err(ServiceError::InvalidSessionId(session_id));
        }
        let mut header = SessionHeader::new(&session_id, &req.corpus_id, req.condition);
        if let Some(w) = req.workspace {
            header.workspace = w;
        }
        if let Some(v) = req.viz {
            v.validate()
                .map_err(|e| ServiceError::InvalidConfig(e.to_string()))?;
            header.viz = v;
        }

        let mut sessions = self.sessions.write();
        if sessions.contains_key(&session_id) {
            return Err(ServiceError::SessionExists(session_id));
        }
        let dir = self.data_dir.join(&session_id);
        let sink = FileSink::create(&dir, &header).map_err(|source| match source.kind() {
            std::io::ErrorKind::AlreadyExists => ServiceError::SessionExists(session_id.clone()),
            _ => ServiceError::Io {
                path: dir.clone(),
                source,
            },
        })?;
        let core = SessionCore::new(header, corpus, Box::new(sink)).map_err(|source| {
            ServiceError::Recover {
                session: session_id.clone(),
                source,
            }
        })?;
        let summary = SessionSummary {
            session_id: session_id.clone(),
            corpus_id: req.corpus_id,
            condition: req.condition,
            seq: 0,
            connected: Vec::new(),
        };
        sessions.insert(session_id, Arc::new(LiveSession::new(core)));
        Ok(summary)
    }

    pub fn sessions(&self) -> Vec<SessionSummary> {
        self.sessions
            .read()
            .iter()
            .map(|(id, s)| {
                let core = s.core.lock();
                SessionSummary {
                    session_id: id.clone(),
                    corpus_id: core.header().corpus_id.clone(),
                    condition: core.condition(),
                    seq: core.applied_seq(),
                    connected: s.members.lock().keys().copied().collect(),
                }
            })
            .collect()
    }

    pub fn snapshot(&self, session_id: &str) -> Result<Snapshot, ServiceError> {
        Ok(self.session(session_id)?.core.lock().snapshot())
    }

    pub fn export_log(&self, session_id: &str) -> Result<String, ServiceError> {
        Ok(self.session(session_id)?.core.lock().log().to_text())
    }

    pub fn graph(&self, session_id: &str, threshold: f64) -> Result<ConnectionGraph, ServiceError> {
        let corpus = self.session(session_id)?.core.lock().corpus().clone();
        corpus_graph(&corpus, threshold).map_err(|e| ServiceError::InvalidConfig(e.to_string()))
    }

    /// Joins `role` to a session. At most one connection per role; the
    /// returned receiver first yields the snapshot, then every accepted
    /// operation after it in sequence order.
    pub fn join(
        &self,
        session_id: &str,
        role: Role,
        version: u32,
    ) -> Result<Membership, ServiceError> {
        if version != PROTOCOL_VERSION {
            return Err(ServiceError::UnsupportedVersion(version));
        }
        let session = self.session(session_id)?;
        let (tx, rx) = unbounded_channel();
        let conn_id = self.next_conn.fetch_add(1, Ordering::Relaxed);
        let token = uuid::Uuid::new_v4().simple().to_string();

        // holding the core lock keeps accepts from interleaving with the snapshot
        let core = session.core.lock();
        let peers = {
            let mut members = session.members.lock();
            if members.contains_key(&role) {
                return Err(ServiceError::RoleTaken(role));
            }
            let peers: Vec<Role> = members.keys().copied().collect();
            members.insert(
                role,
                Member {
                    conn_id,
                    tx: tx.clone(),
                },
            );
            peers
        };
        session.tokens.lock().insert(token.clone(), role);
        let documents: Vec<Document> = core
            .corpus()
            .documents_for_role(role)
            .into_iter()
            .cloned()
            .collect();
        let _ = tx.send(ServerMessage::Snapshot {
            version: PROTOCOL_VERSION,
            role,
            token: token.clone(),
            snapshot: core.snapshot(),
            documents,
            peers,
            timer_minutes: self.timer_minutes,
        });
        drop(core);
        session.notify_others(role, ServerMessage::PeerJoined { role });
        Ok(Membership {
            session_id: session_id.to_string(),
            role,
            conn_id,
            token,
            rx,
        })
    }

    pub fn leave(&self, session_id: &str, role: Role, conn_id: u64) {
        let Ok(session) = self.session(session_id) else {
            return;
        };
        let removed = {
            let mut members = session.members.lock();
            match members.get(&role) {
                Some(m) if m.conn_id == conn_id => members.remove(&role).is_some(),
                _ => false,
            }
        };
        if removed {
            session.notify_others(role, ServerMessage::PeerLeft { role });
        }
    }

    /// Sequences an operation from a joined connection. Accepts go to every
    /// member; rejections and duplicates only to the submitter.
    pub fn submit(
        &self,
        session_id: &str,
        role: Role,
        conn_id: u64,
        op: Operation,
    ) -> Result<(), ServiceError> {
        let session = self.session(session_id)?;
        if op.actor != role {
            return Err(ServiceError::ActorMismatch {
                actor: op.actor,
                role,
            });
        }
        let mut core = session.core.lock();
        let members = session.members.lock();
        let me = members
            .get(&role)
            .filter(|m| m.conn_id == conn_id)
            .ok_or(ServiceError::NotMember)?;
        let me_tx = me.tx.clone();
        drop(members);
        match core.submit(op)? {
            Submitted::Accepted(a) => {
                let msg = ServerMessage::from(a);
                // sent under the core lock so every member sees seq order
                for m in session.members.lock().values() {
                    let _ = m.tx.send(msg.clone());
                }
            }
            Submitted::Rejected(r) => {
                let _ = me_tx.send(ServerMessage::Reject {
                    op_id: r.op_id,
                    reason: r.reason,
                });
            }
            Submitted::Duplicate { op_id, verdict } => {
                let _ = me_tx.send(ServerMessage::Duplicate { op_id, verdict });
            }
        }
        Ok(())
    }

    /// Sends to one connection if it is still joined.
    pub fn send_to(&self, session_id: &str, role: Role, conn_id: u64, msg: ServerMessage) {
        if let Ok(session) = self.session(session_id) {
            if let Some(m) = session
                .members
                .lock()
                .get(&role)
                .filter(|m| m.conn_id == conn_id)
            {
                let _ = m.tx.send(msg);
            }
        }
    }

    /// Role that `token` was issued to in this session.
    pub fn authorize(&self, session_id: &str, token: &str) -> Result<Role, ServiceError> {
        self.session(session_id)?
            .tokens
            .lock()
            .get(token)
            .copied()
            .ok_or(ServiceError::BadToken)
    }

    pub fn document(
        &self,
        session_id: &str,
        token: &str,
        doc_id: &str,
    ) -> Result<Document, ServiceError> {
        let role = self.authorize(session_id, token)?;
        let session = self.session(session_id)?;
        let core = session.core.lock();
        let doc = core
            .corpus()
            .document(doc_id)
            .ok_or_else(|| ServiceError::UnknownDocument(doc_id.to_string()))?;
        if !doc.assigned_role.includes(role) {
            return Err(ServiceError::Forbidden {
                doc_id: doc_id.to_string(),
                role,
            });
        }
        Ok(doc.clone())
    }
}
