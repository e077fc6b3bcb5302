//! Authoritative shared Analysis Space state and its reducer.
//!
//! State is a pure fold of the sequenced operation log. Every artifact is
//! keyed by the sequence number of the operation that created it, so replicas
//! that apply the same prefix assign the same ids.

mod ops;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use ops::OpKind;

use crate::corpus::Corpus;
use crate::entity::{
    Channel, EntityId, EntityRegistry, ExtractorConfig, MentionEvent, MentionTarget, Origin,
};
use crate::role::Role;
use crate::text::{self, Span};

/// Column where annotation stickies appear.
pub const SPAWN_X: f64 = 40.0;
pub const SPAWN_Y: f64 = 40.0;
pub const SPAWN_STEP: f64 = 70.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisStatus {
    Open,
    Accepted,
    Rejected,
    NeedsMoreInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sticky {
    pub sticky_id: u64,
    pub author: Role,
    pub text: String,
    pub x: f64,
    pub y: f64,
    pub source_annotation_id: Option<u64>,
    pub pile_id: Option<String>,
    pub last_editor: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StickyLink {
    pub link_id: u64,
    pub author: Role,
    pub from_sticky: u64,
    pub to_sticky: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotation_id: u64,
    pub author: Role,
    pub doc_id: String,
    pub span: Span,
    pub quote: String,
    pub note_text: String,
    pub sticky_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub message_id: u64,
    pub author: Role,
    pub text: String,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub evidence_id: u64,
    pub author: Role,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisEntry {
    pub hypothesis_id: u64,
    pub author: Role,
    pub hypothesis_text: String,
    pub text_author: Role,
    pub confirming: Vec<Evidence>,
    pub disconfirming: Vec<Evidence>,
    pub status: HypothesisStatus,
    pub status_author: Option<Role>,
    pub status_comment: String,
    pub comment_author: Option<Role>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMarker {
    pub marker_id: u64,
    pub author: Role,
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub doc_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub event_id: u64,
    pub author: Role,
    pub label: String,
    pub timestamp: f64,
    pub doc_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkspaceConfig {
    pub extractor: ExtractorConfig,
    /// Whether an analyst may edit, move or delete the other analyst's stickies.
    pub allow_cross_author_edits: bool,
}

impl Default for WorkspaceConfig {
    fn default() -> Self {
        Self {
            extractor: ExtractorConfig::default(),
            allow_cross_author_edits: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    #[error("text must not be empty")]
    EmptyText,
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("unknown sticky {0}")]
    UnknownSticky(u64),
    #[error("unknown hypothesis {0}")]
    UnknownHypothesis(u64),
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("document `{doc_id}` is not available to {role}")]
    DocumentNotVisible { doc_id: String, role: Role },
    #[error("span {start}..{end} is outside the document or empty")]
    InvalidSpan { start: usize, end: usize },
    #[error("a sticky cannot link to itself")]
    SelfLink,
    #[error("stickies {0} and {1} are already linked")]
    AlreadyLinked(u64, u64),
    #[error("no stickies given")]
    EmptySelection,
    #[error("sticky {0} belongs to the other analyst")]
    NotAuthor(u64),
    #[error("{0} is disabled in condition standard")]
    DisabledInCondition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("out-of-order operation: expected seq {expected}, got {got}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("rejected: {0}")]
    Rejected(RejectReason),
}

/// A piece of current shared text and where it lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SharedText<'a> {
    pub channel: Channel,
    pub artifact_id: u64,
    pub text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceState {
    pub applied_seq: u64,
    pub config: WorkspaceConfig,
    pub stickies: BTreeMap<u64, Sticky>,
    pub links: BTreeMap<u64, StickyLink>,
    pub annotations: BTreeMap<u64, Annotation>,
    pub chat: BTreeMap<u64, ChatMessage>,
    pub hypotheses: BTreeMap<u64, HypothesisEntry>,
    pub map_markers: BTreeMap<u64, MapMarker>,
    pub timeline: BTreeMap<u64, TimelineEvent>,
    pub registry: EntityRegistry,
    /// Entities in the order they were first mentioned.
    pub mention_order: Vec<EntityId>,
    pub last_hypothesis_mention: Option<EntityId>,
    pub annotation_spawns: u32,
}

fn require_text(text: &str) -> Result<(), RejectReason> {
    if text.trim().is_empty() {
        Err(RejectReason::EmptyText)
    } else {
        Ok(())
    }
}

fn require_finite(values: &[f64]) -> Result<(), RejectReason> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(RejectReason::NonFinite)
    }
}

/// Sticky text for an annotation: the quoted span, then the note if any.
pub fn annotation_sticky_text(quote: &str, note: &str) -> String {
    let note = note.trim();
    if note.is_empty() {
        format!("\"{quote}\"")
    } else {
        format!("\"{quote}\"\n{note}")
    }
}

impl WorkspaceState {
    pub fn new(corpus: &Corpus, config: WorkspaceConfig) -> Self {
        Self {
            applied_seq: 0,
            config,
            stickies: BTreeMap::new(),
            links: BTreeMap::new(),
            annotations: BTreeMap::new(),
            chat: BTreeMap::new(),
            hypotheses: BTreeMap::new(),
            map_markers: BTreeMap::new(),
            timeline: BTreeMap::new(),
            registry: EntityRegistry::from_gazetteer(corpus.gazetteer()),
            mention_order: Vec::new(),
            last_hypothesis_mention: None,
            annotation_spawns: 0,
        }
    }

    fn sticky(&self, id: u64) -> Result<&Sticky, RejectReason> {
        self.stickies
            .get(&id)
            .ok_or(RejectReason::UnknownSticky(id))
    }

    fn editable_sticky(&self, id: u64, actor: Role) -> Result<&Sticky, RejectReason> {
        let sticky = self.sticky(id)?;
        if !self.config.allow_cross_author_edits && sticky.author != actor {
            return Err(RejectReason::NotAuthor(id));
        }
        Ok(sticky)
    }

    fn hypothesis(&self, id: u64) -> Result<&HypothesisEntry, RejectReason> {
        self.hypotheses
            .get(&id)
            .ok_or(RejectReason::UnknownHypothesis(id))
    }

    fn linked(&self, a: u64, b: u64) -> bool {
        self.links.values().any(|l| {
            (l.from_sticky == a && l.to_sticky == b) || (l.from_sticky == b && l.to_sticky == a)
        })
    }

    fn check_doc_ref(doc_id: &Option<String>, corpus: &Corpus) -> Result<(), RejectReason> {
        match doc_id {
            Some(id) if corpus.document(id).is_none() => {
                Err(RejectReason::UnknownDocument(id.clone()))
            }
            _ => Ok(()),
        }
    }

    /// Checks `kind` against the current state without changing it.
    pub fn validate(
        &self,
        actor: Role,
        kind: &OpKind,
        corpus: &Corpus,
    ) -> Result<(), RejectReason> {
        match kind {
            OpKind::CreateSticky { text, x, y } => {
                require_text(text)?;
                require_finite(&[*x, *y])
            }
            OpKind::EditSticky { sticky_id, text } => {
                self.editable_sticky(*sticky_id, actor)?;
                require_text(text)
            }
            OpKind::MoveSticky { sticky_id, x, y } => {
                self.editable_sticky(*sticky_id, actor)?;
                require_finite(&[*x, *y])
            }
            OpKind::LinkStickies {
                from_sticky,
                to_sticky,
            } => {
                if from_sticky == to_sticky {
                    return Err(RejectReason::SelfLink);
                }
                self.sticky(*from_sticky)?;
                self.sticky(*to_sticky)?;
                if self.linked(*from_sticky, *to_sticky) {
                    return Err(RejectReason::AlreadyLinked(*from_sticky, *to_sticky));
                }
                Ok(())
            }
            OpKind::PileStickies { sticky_ids, .. } => {
                if sticky_ids.is_empty() {
                    return Err(RejectReason::EmptySelection);
                }
                sticky_ids
                    .iter()
                    .try_for_each(|id| self.sticky(*id).map(|_| ()))
            }
            OpKind::DeleteSticky { sticky_id } => {
                self.editable_sticky(*sticky_id, actor).map(|_| ())
            }
            OpKind::PostChat { text } | OpKind::CreateHypothesis { text } => require_text(text),
            OpKind::CreateAnnotation {
                doc_id, start, end, ..
            } => {
                let doc = corpus
                    .document(doc_id)
                    .ok_or_else(|| RejectReason::UnknownDocument(doc_id.clone()))?;
                if !doc.assigned_role.includes(actor) {
                    return Err(RejectReason::DocumentNotVisible {
                        doc_id: doc_id.clone(),
                        role: actor,
                    });
                }
                let invalid = RejectReason::InvalidSpan {
                    start: *start,
                    end: *end,
                };
                if start >= end || *end > text::char_len(&doc.body) {
                    return Err(invalid);
                }
                let quote =
                    text::slice_chars(&doc.body, Span::new(*start, *end)).ok_or(invalid.clone())?;
                require_text(quote).map_err(|_| invalid)
            }
            OpKind::EditHypothesisText {
                hypothesis_id,
                text,
            }
            | OpKind::AddConfirming {
                hypothesis_id,
                text,
            }
            | OpKind::AddDisconfirming {
                hypothesis_id,
                text,
            } => {
                self.hypothesis(*hypothesis_id)?;
                require_text(text)
            }
            OpKind::SetHypothesisStatus { hypothesis_id, .. }
            | OpKind::SetStatusComment { hypothesis_id, .. } => {
                self.hypothesis(*hypothesis_id).map(|_| ())
            }
            OpKind::AddMapMarker {
                label,
                x,
                y,
                doc_id,
            } => {
                require_text(label)?;
                require_finite(&[*x, *y])?;
                Self::check_doc_ref(doc_id, corpus)
            }
            OpKind::AddTimelineEvent {
                label,
                timestamp,
                doc_id,
            } => {
                require_text(label)?;
                require_finite(&[*timestamp])?;
                Self::check_doc_ref(doc_id, corpus)
            }
        }
    }

    /// Applies the operation sequenced as `seq`. On any error the state is
    /// left untouched.
    pub fn apply(
        &mut self,
        seq: u64,
        actor: Role,
        kind: &OpKind,
        corpus: &Corpus,
    ) -> Result<(), ApplyError> {
        let expected = self.applied_seq + 1;
        if seq != expected {
            return Err(ApplyError::OutOfOrder { expected, got: seq });
        }
        self.validate(actor, kind, corpus)
            .map_err(ApplyError::Rejected)?;

        match kind.clone() {
            OpKind::CreateSticky { text, x, y } => {
                self.insert_sticky(seq, actor, text, x, y, None);
            }
            OpKind::EditSticky { sticky_id, text } => {
                let text_copy = text.clone();
                let sticky = self.stickies.get_mut(&sticky_id).expect("validated");
                sticky.text = text;
                sticky.last_editor = actor;
                self.scan(Channel::Sticky, &text_copy);
            }
            OpKind::MoveSticky { sticky_id, x, y } => {
                let sticky = self.stickies.get_mut(&sticky_id).expect("validated");
                sticky.x = x;
                sticky.y = y;
            }
            OpKind::LinkStickies {
                from_sticky,
                to_sticky,
            } => {
                self.links.insert(
                    seq,
                    StickyLink {
                        link_id: seq,
                        author: actor,
                        from_sticky,
                        to_sticky,
                    },
                );
            }
            OpKind::PileStickies {
                sticky_ids,
                pile_id,
            } => {
                let pile = (!pile_id.is_empty()).then_some(pile_id);
                for id in sticky_ids {
                    self.stickies.get_mut(&id).expect("validated").pile_id = pile.clone();
                }
            }
            OpKind::DeleteSticky { sticky_id } => {
                self.stickies.remove(&sticky_id);
                self.links
                    .retain(|_, l| l.from_sticky != sticky_id && l.to_sticky != sticky_id);
            }
            OpKind::PostChat { text } => {
                self.scan(Channel::Chat, &text);
                self.chat.insert(
                    seq,
                    ChatMessage {
                        message_id: seq,
                        author: actor,
                        text,
                        seq,
                    },
                );
            }
            OpKind::CreateAnnotation {
                doc_id,
                start,
                end,
                note,
            } => {
                let doc = corpus.document(&doc_id).expect("validated");
                let span = Span::new(start, end);
                let quote = text::slice_chars(&doc.body, span)
                    .expect("validated")
                    .to_string();
                self.annotations.insert(
                    seq,
                    Annotation {
                        annotation_id: seq,
                        author: actor,
                        doc_id,
                        span,
                        quote,
                        note_text: note.trim().to_string(),
                        sticky_id: seq,
                    },
                );
                self.create_sticky_from_annotation(seq);
            }
            OpKind::CreateHypothesis { text } => {
                self.scan(Channel::Hypothesis, &text);
                self.hypotheses.insert(
                    seq,
                    HypothesisEntry {
                        hypothesis_id: seq,
                        author: actor,
                        hypothesis_text: text,
                        text_author: actor,
                        confirming: Vec::new(),
                        disconfirming: Vec::new(),
                        status: HypothesisStatus::Open,
                        status_author: None,
                        status_comment: String::new(),
                        comment_author: None,
                    },
                );
            }
            OpKind::EditHypothesisText {
                hypothesis_id,
                text,
            } => {
                self.scan(Channel::Hypothesis, &text);
                let h = self.hypotheses.get_mut(&hypothesis_id).expect("validated");
                h.hypothesis_text = text;
                h.text_author = actor;
            }
            OpKind::AddConfirming {
                hypothesis_id,
                text,
            }
            | OpKind::AddDisconfirming {
                hypothesis_id,
                text,
            } => {
                let confirming = matches!(kind, OpKind::AddConfirming { .. });
                self.scan(Channel::Hypothesis, &text);
                let h = self.hypotheses.get_mut(&hypothesis_id).expect("validated");
                let evidence = Evidence {
                    evidence_id: seq,
                    author: actor,
                    text,
                };
                if confirming {
                    h.confirming.push(evidence);
                } else {
                    h.disconfirming.push(evidence);
                }
            }
            OpKind::SetHypothesisStatus {
                hypothesis_id,
                status,
            } => {
                let h = self.hypotheses.get_mut(&hypothesis_id).expect("validated");
                h.status = status;
                h.status_author = Some(actor);
            }
            OpKind::SetStatusComment {
                hypothesis_id,
                comment,
            } => {
                self.scan(Channel::Hypothesis, &comment);
                let h = self.hypotheses.get_mut(&hypothesis_id).expect("validated");
                h.status_comment = comment;
                h.comment_author = Some(actor);
            }
            OpKind::AddMapMarker {
                label,
                x,
                y,
                doc_id,
            } => {
                self.map_markers.insert(
                    seq,
                    MapMarker {
                        marker_id: seq,
                        author: actor,
                        label,
                        x,
                        y,
                        doc_id,
                    },
                );
            }
            OpKind::AddTimelineEvent {
                label,
                timestamp,
                doc_id,
            } => {
                self.timeline.insert(
                    seq,
                    TimelineEvent {
                        event_id: seq,
                        author: actor,
                        label,
                        timestamp,
                        doc_id,
                    },
                );
            }
        }
        self.applied_seq = seq;
        Ok(())
    }

    fn insert_sticky(
        &mut self,
        id: u64,
        author: Role,
        text: String,
        x: f64,
        y: f64,
        source: Option<u64>,
    ) {
        self.scan(Channel::Sticky, &text);
        self.stickies.insert(
            id,
            Sticky {
                sticky_id: id,
                author,
                text,
                x,
                y,
                source_annotation_id: source,
                pile_id: None,
                last_editor: author,
            },
        );
    }

    /// Spawns the sticky for an already-recorded annotation in the next free
    /// slot of the spawn column.
    fn create_sticky_from_annotation(&mut self, annotation_id: u64) {
        let ann = &self.annotations[&annotation_id];
        let text = annotation_sticky_text(&ann.quote, &ann.note_text);
        let (author, sticky_id) = (ann.author, ann.sticky_id);
        let y = SPAWN_Y + SPAWN_STEP * f64::from(self.annotation_spawns);
        self.annotation_spawns += 1;
        self.insert_sticky(sticky_id, author, text, SPAWN_X, y, Some(annotation_id));
    }

    /// Runs the extractor over freshly written text: registers new names,
    /// records first-mention order and the latest hypothesis mention.
    fn scan(&mut self, channel: Channel, text: &str) {
        let mentions = self.registry.matcher().extract(text, self.config.extractor);
        let mut last = None;
        for m in mentions {
            let id = match m.target {
                MentionTarget::Entity(id) => id,
                MentionTarget::Candidate(name) => {
                    match self.registry.register(&name, Origin::Heuristic) {
                        Some(id) => id,
                        None => continue,
                    }
                }
            };
            if !self.mention_order.contains(&id) {
                self.mention_order.push(id.clone());
            }
            last = Some(id);
        }
        if channel == Channel::Hypothesis && last.is_some() {
            self.last_hypothesis_mention = last;
        }
    }

    /// Every current shared text, ordered by collection then id.
    pub fn shared_texts(&self) -> Vec<SharedText<'_>> {
        let mut out = Vec::new();
        for s in self.stickies.values() {
            out.push(SharedText {
                channel: Channel::Sticky,
                artifact_id: s.sticky_id,
                text: &s.text,
            });
        }
        for m in self.chat.values() {
            out.push(SharedText {
                channel: Channel::Chat,
                artifact_id: m.message_id,
                text: &m.text,
            });
        }
        for h in self.hypotheses.values() {
            let hyp = |artifact_id, text| SharedText {
                channel: Channel::Hypothesis,
                artifact_id,
                text,
            };
            out.push(hyp(h.hypothesis_id, &h.hypothesis_text));
            for e in h.confirming.iter().chain(&h.disconfirming) {
                out.push(hyp(e.evidence_id, &e.text));
            }
            if !h.status_comment.is_empty() {
                out.push(hyp(h.hypothesis_id, &h.status_comment));
            }
        }
        out
    }

    /// Resolved mentions across all current shared text.
    pub fn mentions(&self) -> Vec<MentionEvent> {
        let matcher = self.registry.matcher();
        let config = self.config.extractor.counting();
        let mut events = Vec::new();
        for shared in self.shared_texts() {
            for m in matcher.extract(shared.text, config) {
                if let MentionTarget::Entity(entity_id) = m.target {
                    events.push(MentionEvent {
                        entity_id,
                        channel: shared.channel,
                        artifact_id: shared.artifact_id,
                        span: m.span,
                        surface_text: m.surface_text,
                    });
                }
            }
        }
        events
    }

    /// Canonical serialization: field order is fixed and maps are sorted.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Referential integrity across collections.
    pub fn check_integrity(&self) -> Result<(), String> {
        let mut pairs = std::collections::BTreeSet::new();
        for link in self.links.values() {
            if link.from_sticky == link.to_sticky {
                return Err(format!("link {} is a self-link", link.link_id));
            }
            for end in [link.from_sticky, link.to_sticky] {
                if !self.stickies.contains_key(&end) {
                    return Err(format!(
                        "link {} points at missing sticky {end}",
                        link.link_id
                    ));
                }
            }
            let pair = (
                link.from_sticky.min(link.to_sticky),
                link.from_sticky.max(link.to_sticky),
            );
            if !pairs.insert(pair) {
                return Err(format!("duplicate link between {} and {}", pair.0, pair.1));
            }
        }
        for s in self.stickies.values() {
            if let Some(a) = s.source_annotation_id {
                if !self.annotations.contains_key(&a) {
                    return Err(format!(
                        "sticky {} cites missing annotation {a}",
                        s.sticky_id
                    ));
                }
            }
            if !(s.x.is_finite() && s.y.is_finite()) {
                return Err(format!("sticky {} has a non-finite position", s.sticky_id));
            }
        }
        for h in self.hypotheses.values() {
            if h.hypothesis_text.trim().is_empty() {
                return Err(format!("hypothesis {} has empty text", h.hypothesis_id));
            }
            if h.confirming
                .iter()
                .chain(&h.disconfirming)
                .any(|e| e.text.trim().is_empty())
            {
                return Err(format!("hypothesis {} has empty evidence", h.hypothesis_id));
            }
        }
        for id in self
            .mention_order
            .iter()
            .chain(&self.last_hypothesis_mention)
        {
            if self.registry.get(id).is_none() {
                return Err(format!("entity {id} is not registered"));
            }
        }
        Ok(())
    }
}
