//! Server-sequenced operation log.
//!
//! Submitted operations are validated against the current state, given the
//! next dense sequence number, persisted, applied, and handed back for
//! broadcast. The log is the single source of truth: replaying it from the
//! empty state reproduces the live state exactly.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::role::Role;
use crate::translucence::{
    self, MentionCounter, VisualizationDelta, VisualizationState, VizConfig,
};
use crate::workspace::{ApplyError, OpKind, RejectReason, WorkspaceConfig, WorkspaceState};

pub const LOG_VERSION: u32 = 1;
pub const LOG_FILE: &str = "log.jsonl";
pub const REJECTIONS_FILE: &str = "rejections.jsonl";

/// Interface condition of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Stickies and chat only: no hypothesis window, no visualization.
    Standard,
    Translucence,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Standard => "standard",
            Condition::Translucence => "translucence",
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Condition::Standard),
            "translucence" => Ok(Condition::Translucence),
            other => Err(format!("unknown condition `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operation {
    pub op_id: String,
    pub session_id: String,
    pub actor: Role,
    #[serde(flatten)]
    pub kind: OpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_time: Option<f64>,
    /// Assigned by the server; absent on submission.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
}

impl Operation {
    pub fn new(
        op_id: impl Into<String>,
        session_id: impl Into<String>,
        actor: Role,
        kind: OpKind,
    ) -> Self {
        Self {
            op_id: op_id.into(),
            session_id: session_id.into(),
            actor,
            kind,
            client_time: None,
            seq: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub log_version: u32,
    pub session_id: String,
    pub corpus_id: String,
    pub condition: Condition,
    pub workspace: WorkspaceConfig,
    pub viz: VizConfig,
}

impl SessionHeader {
    pub fn new(
        session_id: impl Into<String>,
        corpus_id: impl Into<String>,
        condition: Condition,
    ) -> Self {
        Self {
            log_version: LOG_VERSION,
            session_id: session_id.into(),
            corpus_id: corpus_id.into(),
            condition,
            workspace: WorkspaceConfig::default(),
            viz: VizConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionRecord {
    pub op_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Accepted { seq: u64 },
    Rejected { reason: String },
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log is empty: header line missing")]
    MissingHeader,
    #[error("line {line}: {source}")]
    Malformed {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported log version {0}")]
    UnsupportedVersion(u32),
    #[error("line {line}: operation `{op_id}` has no seq")]
    Unsequenced { line: usize, op_id: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Accepted operations of one session, in sequence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub header: SessionHeader,
    pub ops: Vec<Operation>,
    #[serde(default)]
    pub rejections: Vec<RejectionRecord>,
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut line = serde_json::to_string(value).expect("log records serialize");
    line.push('\n');
    line
}

impl SessionLog {
    pub fn new(header: SessionHeader) -> Self {
        Self {
            header,
            ops: Vec::new(),
            rejections: Vec::new(),
        }
    }

    /// Export format: the header line, then one accepted operation per line.
    pub fn to_text(&self) -> String {
        let mut out = json_line(&self.header);
        for op in &self.ops {
            out.push_str(&json_line(op));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(LogError::MissingHeader)?;
        let header: SessionHeader = serde_json::from_str(first)
            .map_err(|source| LogError::Malformed { line: 1, source })?;
        if header.log_version != LOG_VERSION {
            return Err(LogError::UnsupportedVersion(header.log_version));
        }
        let mut ops = Vec::new();
        for (idx, line) in lines {
            let op: Operation =
                serde_json::from_str(line).map_err(|source| LogError::Malformed {
                    line: idx + 1,
                    source,
                })?;
            if op.seq.is_none() {
                return Err(LogError::Unsequenced {
                    line: idx + 1,
                    op_id: op.op_id,
                });
            }
            ops.push(op);
        }
        Ok(Self {
            header,
            ops,
            rejections: Vec::new(),
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, LogError> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("log was recorded against corpus `{log}`, but corpus `{corpus}` was supplied")]
    CorpusMismatch { log: String, corpus: String },
    #[error("missing seq {0}")]
    MissingSeq(u64),
    #[error("unexpected seq {got} (expected {expected})")]
    UnexpectedSeq { expected: u64, got: u64 },
    #[error("operation `{0}` has no seq")]
    Unsequenced(String),
    #[error("operation at seq {seq} does not apply: {reason}")]
    InvalidOp { seq: u64, reason: RejectReason },
}

/// Folds a log from the empty state.
pub fn replay(log: &SessionLog, corpus: &Corpus) -> Result<WorkspaceState, ReplayError> {
    replay_with(log, corpus, |_, _| {})
}

/// Like [`replay`], calling `observe` after every applied operation.
pub fn replay_with(
    log: &SessionLog,
    corpus: &Corpus,
    mut observe: impl FnMut(&Operation, &WorkspaceState),
) -> Result<WorkspaceState, ReplayError> {
    if log.header.corpus_id != corpus.id() {
        return Err(ReplayError::CorpusMismatch {
            log: log.header.corpus_id.clone(),
            corpus: corpus.id().to_string(),
        });
    }
    let mut state = WorkspaceState::new(corpus, log.header.workspace);
    for op in &log.ops {
        let seq = op
            .seq
            .ok_or_else(|| ReplayError::Unsequenced(op.op_id.clone()))?;
        let expected = state.applied_seq + 1;
        if seq > expected {
            return Err(ReplayError::MissingSeq(expected));
        }
        state
            .apply(seq, op.actor, &op.kind, corpus)
            .map_err(|e| match e {
                ApplyError::OutOfOrder { expected, got } => {
                    ReplayError::UnexpectedSeq { expected, got }
                }
                ApplyError::Rejected(reason) => ReplayError::InvalidOp { seq, reason },
            })?;
        observe(op, &state);
    }
    Ok(state)
}

/// Durable destination for accepted operations and rejections.
pub trait LogSink: Send {
    fn append_op(&mut self, op: &Operation) -> io::Result<()>;
    fn append_rejection(&mut self, record: &RejectionRecord) -> io::Result<()>;
}

/// Keeps nothing; for tests and ephemeral sessions.
#[derive(Debug, Default)]
pub struct NullSink;

impl LogSink for NullSink {
    fn append_op(&mut self, _op: &Operation) -> io::Result<()> {
        Ok(())
    }

    fn append_rejection(&mut self, _record: &RejectionRecord) -> io::Result<()> {
        Ok(())
    }
}

/// Append-only JSON-lines files in a session directory, synced before every
/// acknowledgment.
#[derive(Debug)]
pub struct FileSink {
    dir: PathBuf,
    ops: File,
    rejections: File,
}

fn append_synced(file: &mut File, line: &str) -> io::Result<()> {
    file.write_all(line.as_bytes())?;
    file.sync_data()
}

fn open_append(path: &Path) -> io::Result<File> {
    OpenOptions::new().create(true).append(true).open(path)
}

/// Drops a torn final line (a write interrupted by a crash). Returns the
/// complete lines.
fn read_complete_lines(path: &Path) -> io::Result<Vec<String>> {
    let raw = match fs::read(path) {
        Ok(raw) => raw,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let complete = raw.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    if complete < raw.len() {
        OpenOptions::new()
            .write(true)
            .open(path)?
            .set_len(complete as u64)?;
    }
    BufReader::new(&raw[..complete]).lines().collect()
}

impl FileSink {
    /// Starts a new session directory with its header line.
    pub fn create(dir: impl AsRef<Path>, header: &SessionHeader) -> io::Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut ops = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(dir.join(LOG_FILE))?;
        append_synced(&mut ops, &json_line(header))?;
        let rejections = open_append(&dir.join(REJECTIONS_FILE))?;
        Ok(Self {
            dir,
            ops,
            rejections,
        })
    }

    /// Reopens a session directory after a restart.
    pub fn open(dir: impl AsRef<Path>) -> Result<(SessionLog, Self), LogError> {
        let dir = dir.as_ref().to_path_buf();
        let log_path = dir.join(LOG_FILE);
        let lines = read_complete_lines(&log_path)?;
        let mut log = SessionLog::parse(&lines.join("\n"))?;
        for (idx, line) in read_complete_lines(&dir.join(REJECTIONS_FILE))?
            .iter()
            .enumerate()
        {
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(line).map_err(|source| LogError::Malformed {
                line: idx + 1,
                source,
            })?;
            log.rejections.push(record);
        }
        let ops = open_append(&log_path)?;
        let rejections = open_append(&dir.join(REJECTIONS_FILE))?;
        Ok((
            log,
            Self {
                dir,
                ops,
                rejections,
            },
        ))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl LogSink for FileSink {
    fn append_op(&mut self, op: &Operation) -> io::Result<()> {
        append_synced(&mut self.ops, &json_line(op))
    }

    fn append_rejection(&mut self, record: &RejectionRecord) -> io::Result<()> {
        append_synced(&mut self.rejections, &json_line(record))
    }
}

#[derive(Debug, Error)]
pub enum SubmitError {
    #[error("operation addressed to session `{got}`, not `{expected}`")]
    WrongSession { expected: String, got: String },
    #[error("malformed operation: {0}")]
    Malformed(String),
    #[error("failed to persist operation: {0}")]
    Persist(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accepted {
    pub op: Operation,
    pub seq: u64,
    /// Present only in translucence sessions.
    pub viz_delta: Option<VisualizationDelta>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Submitted {
    Accepted(Accepted),
    Rejected(RejectionRecord),
    /// The op id was seen before; this is its original verdict.
    Duplicate {
        op_id: String,
        verdict: Verdict,
    },
}

impl Submitted {
    pub fn verdict(&self) -> Verdict {
        match self {
            Submitted::Accepted(a) => Verdict::Accepted { seq: a.seq },
            Submitted::Rejected(r) => Verdict::Rejected {
                reason: r.reason.clone(),
            },
            Submitted::Duplicate { verdict, .. } => verdict.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub session_id: String,
    pub corpus_id: String,
    pub condition: Condition,
    pub seq: u64,
    pub hash: String,
    pub state: WorkspaceState,
    /// Present only in translucence sessions.
    pub visualization: Option<VisualizationState>,
}

impl Snapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

/// The single writer of one session: validation, sequencing, persistence and
/// application happen here, one operation at a time.
pub struct SessionCore {
    corpus: Arc<Corpus>,
    log: SessionLog,
    state: WorkspaceState,
    viz: VisualizationState,
    verdicts: HashMap<String, Verdict>,
    sink: Box<dyn LogSink>,
    cache: MentionCounter,
}

impl std::fmt::Debug for SessionCore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionCore")
            .field("session_id", &self.log.header.session_id)
            .field("applied_seq", &self.state.applied_seq)
            .finish_non_exhaustive()
    }
}

impl SessionCore {
    pub fn new(
        header: SessionHeader,
        corpus: Arc<Corpus>,
        sink: Box<dyn LogSink>,
    ) -> Result<Self, ReplayError> {
        Self::recover(SessionLog::new(header), corpus, sink)
    }

    /// Rebuilds a session from its persisted log.
    pub fn recover(
        log: SessionLog,
        corpus: Arc<Corpus>,
        sink: Box<dyn LogSink>,
    ) -> Result<Self, ReplayError> {
        let state = replay(&log, &corpus)?;
        let mut verdicts = HashMap::new();
        for op in &log.ops {
            verdicts.insert(
                op.op_id.clone(),
                Verdict::Accepted {
                    seq: op.seq.expect("replayed"),
                },
            );
        }
        for r in &log.rejections {
            verdicts
                .entry(r.op_id.clone())
                .or_insert_with(|| Verdict::Rejected {
                    reason: r.reason.clone(),
                });
        }
        let mut core = Self {
            corpus,
            log,
            state,
            viz: VisualizationState::default(),
            verdicts,
            sink,
            cache: MentionCounter::default(),
        };
        core.viz = core.derive();
        Ok(core)
    }

    fn derive(&mut self) -> VisualizationState {
        let counts = self.cache.counts(&self.state);
        translucence::visualization_from_counts(&self.state, counts, &self.log.header.viz)
    }

    pub fn header(&self) -> &SessionHeader {
        &self.log.header
    }

    pub fn session_id(&self) -> &str {
        &self.log.header.session_id
    }

    pub fn condition(&self) -> Condition {
        self.log.header.condition
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn state(&self) -> &WorkspaceState {
        &self.state
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn applied_seq(&self) -> u64 {
        self.state.applied_seq
    }

    /// Current visualization; `None` in the standard condition.
    pub fn visualization(&self) -> Option<&VisualizationState> {
        (self.condition() == Condition::Translucence).then_some(&self.viz)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            session_id: self.log.header.session_id.clone(),
            corpus_id: self.log.header.corpus_id.clone(),
            condition: self.condition(),
            seq: self.state.applied_seq,
            hash: self.state.hash(),
            state: self.state.clone(),
            visualization: self.visualization().cloned(),
        }
    }

    fn gate(&self, kind: &OpKind) -> Result<(), RejectReason> {
        if self.condition() == Condition::Standard && kind.is_hypothesis_op() {
            return Err(RejectReason::DisabledInCondition(kind.name().to_string()));
        }
        Ok(())
    }

    pub fn submit(&mut self, mut op: Operation) -> Result<Submitted, SubmitError> {
        if op.session_id != self.log.header.session_id {
            return Err(SubmitError::WrongSession {
                expected: self.log.header.session_id.clone(),
                got: op.session_id,
            });
        }
        if op.op_id.trim().is_empty() {
            return Err(SubmitError::Malformed("op_id must not be empty".into()));
        }
        if op.seq.is_some() {
            return Err(SubmitError::Malformed(
                "seq is assigned by the server".into(),
            ));
        }
        if let Some(verdict) = self.verdicts.get(&op.op_id) {
            return Ok(Submitted::Duplicate {
                op_id: op.op_id,
                verdict: verdict.clone(),
            });
        }

        let checked = self
            .gate(&op.kind)
            .and_then(|()| self.state.validate(op.actor, &op.kind, &self.corpus));
        if let Err(reason) = checked {
            let record = RejectionRecord {
                op_id: op.op_id.clone(),
                reason: reason.to_string(),
            };
            self.sink.append_rejection(&record)?;
            self.verdicts.insert(
                op.op_id.clone(),
                Verdict::Rejected {
                    reason: record.reason.clone(),
                },
            );
            self.log.rejections.push(record.clone());
            return Ok(Submitted::Rejected(record));
        }

        let seq = self.state.applied_seq + 1;
        op.seq = Some(seq);
        self.sink.append_op(&op)?;
        self.state
            .apply(seq, op.actor, &op.kind, &self.corpus)
            .expect("validated operation applies");
        self.verdicts
            .insert(op.op_id.clone(), Verdict::Accepted { seq });
        self.log.ops.push(op.clone());

        let viz_delta = match self.condition() {
            Condition::Translucence => {
                let next = self.derive();
                let delta = self.viz.diff(&next);
                self.viz = next;
                Some(delta)
            }
            Condition::Standard => None,
        };
        Ok(Submitted::Accepted(Accepted { op, seq, viz_delta }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplicaError {
    #[error("expected seq {expected}, received {got}")]
    Gap { expected: u64, got: u64 },
    #[error("broadcast operation does not apply: {0}")]
    Diverged(String),
}

/// A client's local copy, advanced only by server broadcasts.
#[derive(Debug, Clone)]
pub struct ClientReplica {
    corpus: Arc<Corpus>,
    state: WorkspaceState,
    visualization: Option<VisualizationState>,
}

impl ClientReplica {
    pub fn from_snapshot(snapshot: &Snapshot, corpus: Arc<Corpus>) -> Self {
        Self {
            corpus,
            state: snapshot.state.clone(),
            visualization: snapshot.visualization.clone(),
        }
    }

    pub fn apply(&mut self, accepted: &Accepted) -> Result<(), ReplicaError> {
        let expected = self.state.applied_seq + 1;
        if accepted.seq != expected {
            return Err(ReplicaError::Gap {
                expected,
                got: accepted.seq,
            });
        }
        self.state
            .apply(
                accepted.seq,
                accepted.op.actor,
                &accepted.op.kind,
                &self.corpus,
            )
            .map_err(|e| ReplicaError::Diverged(e.to_string()))?;
        if let (Some(viz), Some(delta)) = (&self.visualization, &accepted.viz_delta) {
            self.visualization = Some(viz.apply_delta(delta));
        }
        Ok(())
    }

    pub fn state(&self) -> &WorkspaceState {
        &self.state
    }

    pub fn visualization(&self) -> Option<&VisualizationState> {
        self.visualization.as_ref()
    }

    pub fn hash(&self) -> String {
        self.state.hash()
    }
}
