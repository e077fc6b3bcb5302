use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the two analysts in a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "analyst-A")]
    AnalystA,
    #[serde(rename = "analyst-B")]
    AnalystB,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::AnalystA, Role::AnalystB];

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::AnalystA => "analyst-A",
            Role::AnalystB => "analyst-B",
        }
    }

    /// Stable palette slot used by clients to tint this author's contributions.
    pub fn palette_index(&self) -> usize {
        match self {
            Role::AnalystA => 0,
            Role::AnalystB => 1,
        }
    }

    pub fn other(&self) -> Role {
        match self {
            Role::AnalystA => Role::AnalystB,
            Role::AnalystB => Role::AnalystA,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown role `{0}` (expected analyst-A or analyst-B)")]
pub struct UnknownRole(pub String);

impl FromStr for Role {
    type Err = UnknownRole;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analyst-A" => Ok(Role::AnalystA),
            "analyst-B" => Ok(Role::AnalystB),
            other => Err(UnknownRole(other.to_string())),
        }
    }
}

/// Which analyst(s) receive a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssignedRole {
    #[serde(rename = "analyst-A")]
    AnalystA,
    #[serde(rename = "analyst-B")]
    AnalystB,
    #[serde(rename = "both")]
    Both,
}

impl AssignedRole {
    pub fn includes(&self, role: Role) -> bool {
        matches!(
            (self, role),
            (AssignedRole::Both, _)
                | (AssignedRole::AnalystA, Role::AnalystA)
                | (AssignedRole::AnalystB, Role::AnalystB)
        )
    }
}
