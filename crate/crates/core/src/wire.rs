//! Messages exchanged over the live connection, one JSON object per frame.
//!
//! Every message carries a `type` tag. Unknown fields are ignored so newer
//! peers can add fields without breaking older ones.

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};

use crate::corpus::Document;
use crate::role::Role;
use crate::sync::{Accepted, Operation, Snapshot, Verdict};
use crate::translucence::VisualizationDelta;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello {
        session: String,
        role: Role,
        #[serde(default = "default_version")]
        version: u32,
    },
    Submit {
        op: Operation,
    },
}

// Tagged enums buffer their fields, and the buffer cannot turn the string
// keys of id-keyed maps back into integers. serde_json's own value can.
fn via_value<'de, D: Deserializer<'de>, T: DeserializeOwned>(d: D) -> Result<T, D::Error> {
    serde_json::from_value(serde_json::Value::deserialize(d)?).map_err(D::Error::custom)
}

fn default_version() -> u32 {
    PROTOCOL_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ServerMessage {
    /// Sent on join and resync.
    Snapshot {
        version: u32,
        role: Role,
        /// Bearer token for the document endpoints.
        token: String,
        #[serde(deserialize_with = "via_value")]
        snapshot: Snapshot,
        documents: Vec<Document>,
        peers: Vec<Role>,
        /// Advisory session length; never enforced by the server.
        timer_minutes: u32,
    },
    Accept {
        op: Operation,
        seq: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        viz_delta: Option<VisualizationDelta>,
    },
    Reject {
        op_id: String,
        reason: String,
    },
    Duplicate {
        op_id: String,
        verdict: Verdict,
    },
    PeerJoined {
        role: Role,
    },
    PeerLeft {
        role: Role,
    },
    Error {
        message: String,
    },
}

impl From<Accepted> for ServerMessage {
    fn from(a: Accepted) -> Self {
        ServerMessage::Accept {
            op: a.op,
            seq: a.seq,
            viz_delta: a.viz_delta,
        }
    }
}

impl ServerMessage {
    pub fn as_accepted(&self) -> Option<Accepted> {
        match self {
            ServerMessage::Accept { op, seq, viz_delta } => Some(Accepted {
                op: op.clone(),
                seq: *seq,
                viz_delta: viz_delta.clone(),
            }),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}
