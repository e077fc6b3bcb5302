use serde::{Deserialize, Serialize};

use super::HypothesisStatus;

/// Payload of a workspace operation, tagged by `kind` on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum OpKind {
    CreateSticky {
        text: String,
        x: f64,
        y: f64,
    },
    EditSticky {
        sticky_id: u64,
        text: String,
    },
    MoveSticky {
        sticky_id: u64,
        x: f64,
        y: f64,
    },
    LinkStickies {
        from_sticky: u64,
        to_sticky: u64,
    },
    /// An empty `pile_id` removes the stickies from any pile.
    PileStickies {
        sticky_ids: Vec<u64>,
        pile_id: String,
    },
    DeleteSticky {
        sticky_id: u64,
    },
    PostChat {
        text: String,
    },
    /// Highlights `[start, end)` (characters) of a document; spawns a sticky.
    CreateAnnotation {
        doc_id: String,
        start: usize,
        end: usize,
        #[serde(default)]
        note: String,
    },
    CreateHypothesis {
        text: String,
    },
    EditHypothesisText {
        hypothesis_id: u64,
        text: String,
    },
    AddConfirming {
        hypothesis_id: u64,
        text: String,
    },
    AddDisconfirming {
        hypothesis_id: u64,
        text: String,
    },
    SetHypothesisStatus {
        hypothesis_id: u64,
        status: HypothesisStatus,
    },
    SetStatusComment {
        hypothesis_id: u64,
        comment: String,
    },
    AddMapMarker {
        label: String,
        x: f64,
        y: f64,
        #[serde(default)]
        doc_id: Option<String>,
    },
    AddTimelineEvent {
        label: String,
        timestamp: f64,
        #[serde(default)]
        doc_id: Option<String>,
    },
}

impl OpKind {
    pub const NAMES: [&'static str; 16] = [
        "CreateSticky",
        "EditSticky",
        "MoveSticky",
        "LinkStickies",
        "PileStickies",
        "DeleteSticky",
        "PostChat",
        "CreateAnnotation",
        "CreateHypothesis",
        "EditHypothesisText",
        "AddConfirming",
        "AddDisconfirming",
        "SetHypothesisStatus",
        "SetStatusComment",
        "AddMapMarker",
        "AddTimelineEvent",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OpKind::CreateSticky { .. } => "CreateSticky",
            OpKind::EditSticky { .. } => "EditSticky",
            OpKind::MoveSticky { .. } => "MoveSticky",
            OpKind::LinkStickies { .. } => "LinkStickies",
            OpKind::PileStickies { .. } => "PileStickies",
            OpKind::DeleteSticky { .. } => "DeleteSticky",
            OpKind::PostChat { .. } => "PostChat",
            OpKind::CreateAnnotation { .. } => "CreateAnnotation",
            OpKind::CreateHypothesis { .. } => "CreateHypothesis",
            OpKind::EditHypothesisText { .. } => "EditHypothesisText",
            OpKind::AddConfirming { .. } => "AddConfirming",
            OpKind::AddDisconfirming { .. } => "AddDisconfirming",
            OpKind::SetHypothesisStatus { .. } => "SetHypothesisStatus",
            OpKind::SetStatusComment { .. } => "SetStatusComment",
            OpKind::AddMapMarker { .. } => "AddMapMarker",
            OpKind::AddTimelineEvent { .. } => "AddTimelineEvent",
        }
    }

    /// Operations on the hypothesis window.
    pub fn is_hypothesis_op(&self) -> bool {
        matches!(
            self,
            OpKind::CreateHypothesis { .. }
                | OpKind::EditHypothesisText { .. }
                | OpKind::AddConfirming { .. }
                | OpKind::AddDisconfirming { .. }
                | OpKind::SetHypothesisStatus { .. }
                | OpKind::SetStatusComment { .. }
        )
    }
}
