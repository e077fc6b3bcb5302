//! Suspect visualization derived from workspace state.
//!
//! The strip starts as four unnamed avatars. Every person mentioned in the
//! shared channels gets a named avatar (in first-mention order) that darkens
//! with each mention, followed by trailing unnamed avatars. The person most
//! recently named in a hypothesis field is highlighted.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{Channel, EntityId};
use crate::workspace::WorkspaceState;

/// Unnamed avatars shown before any person has been mentioned.
pub const START_PLACEHOLDERS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VizConfig {
    /// Mentions at which an avatar reaches full shade.
    pub shade_cap: u32,
    /// Unnamed avatars after the named ones (at least 1).
    pub trailing_placeholders: u32,
}

impl Default for VizConfig {
    fn default() -> Self {
        Self {
            shade_cap: 10,
            trailing_placeholders: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum VizConfigError {
    #[error("shade cap must be at least 1")]
    ZeroCap,
    #[error("at least one trailing placeholder is required")]
    NoPlaceholders,
}

impl VizConfig {
    pub fn validate(&self) -> Result<(), VizConfigError> {
        if self.shade_cap < 1 {
            return Err(VizConfigError::ZeroCap);
        }
        if self.trailing_placeholders < 1 {
            return Err(VizConfigError::NoPlaceholders);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelCounts {
    pub sticky: u32,
    pub chat: u32,
    pub hypothesis: u32,
}

impl ChannelCounts {
    pub fn total(&self) -> u32 {
        self.sticky + self.chat + self.hypothesis
    }

    pub fn get(&self, channel: Channel) -> u32 {
        match channel {
            Channel::Sticky => self.sticky,
            Channel::Chat => self.chat,
            Channel::Hypothesis => self.hypothesis,
        }
    }

    pub fn bump(&mut self, channel: Channel) {
        match channel {
            Channel::Sticky => self.sticky += 1,
            Channel::Chat => self.chat += 1,
            Channel::Hypothesis => self.hypothesis += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvatarState {
    pub entity_id: EntityId,
    pub display_name: String,
    pub mention_counts: ChannelCounts,
    pub total_mentions: u32,
    pub shade: f64,
    pub last_hypothesis_highlight: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualizationState {
    pub named_avatars: Vec<AvatarState>,
    pub placeholder_count: u32,
}

impl Default for VisualizationState {
    fn default() -> Self {
        Self {
            named_avatars: Vec::new(),
            placeholder_count: START_PLACEHOLDERS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("shade cap must be at least 1, got {0}")]
pub struct InvalidCap(pub u32);

/// `min(total, cap) / cap`.
pub fn shade_function(total_mentions: u32, cap: u32) -> Result<f64, InvalidCap> {
    if cap < 1 {
        return Err(InvalidCap(cap));
    }
    Ok(f64::from(total_mentions.min(cap)) / f64::from(cap))
}

/// Per-channel mention counts for every entity with at least one mention.
pub fn mention_counts(state: &WorkspaceState) -> BTreeMap<EntityId, ChannelCounts> {
    let mut counts: BTreeMap<EntityId, ChannelCounts> = BTreeMap::new();
    for event in state.mentions() {
        counts
            .entry(event.entity_id)
            .or_default()
            .bump(event.channel);
    }
    counts
}

/// Memoizes per-text mention results between derivations of an evolving
/// state. Results are dropped whenever the registry grows.
#[derive(Debug, Default)]
pub struct MentionCounter {
    registry_len: usize,
    by_text: HashMap<String, Vec<(EntityId, u32)>>,
}

impl MentionCounter {
    /// Same result as [`mention_counts`].
    pub fn counts(&mut self, state: &WorkspaceState) -> BTreeMap<EntityId, ChannelCounts> {
        if self.registry_len != state.registry.len() {
            self.by_text.clear();
            self.registry_len = state.registry.len();
        }
        let matcher = state.registry.matcher();
        let config = state.config.extractor.counting();
        let mut counts: BTreeMap<EntityId, ChannelCounts> = BTreeMap::new();
        for shared in state.shared_texts() {
            let per_text = self
                .by_text
                .entry(shared.text.to_string())
                .or_insert_with(|| {
                    let mut tally: BTreeMap<EntityId, u32> = BTreeMap::new();
                    for m in matcher.extract(shared.text, config) {
                        if let Some(id) = m.entity() {
                            *tally.entry(id.clone()).or_insert(0) += 1;
                        }
                    }
                    tally.into_iter().collect()
                });
            for (id, n) in per_text.iter() {
                let entry = counts.entry(id.clone()).or_default();
                for _ in 0..*n {
                    entry.bump(shared.channel);
                }
            }
        }
        counts
    }
}

pub fn derive_visualization(state: &WorkspaceState, config: &VizConfig) -> VisualizationState {
    visualization_from_counts(state, mention_counts(state), config)
}

/// Builds the strip from precomputed per-entity counts of `state`.
pub fn visualization_from_counts(
    state: &WorkspaceState,
    mut counts: BTreeMap<EntityId, ChannelCounts>,
    config: &VizConfig,
) -> VisualizationState {
    let cap = config.shade_cap.max(1);

    let mut order: Vec<EntityId> = state
        .mention_order
        .iter()
        .filter(|id| counts.contains_key(*id))
        .cloned()
        .collect();
    // names that only became resolvable after later registrations
    let stragglers: Vec<EntityId> = counts
        .keys()
        .filter(|id| !order.contains(id))
        .cloned()
        .collect();
    order.extend(stragglers);

    let named_avatars: Vec<AvatarState> = order
        .into_iter()
        .map(|id| {
            let mention_counts = counts.remove(&id).unwrap_or_default();
            let total = mention_counts.total();
            let display_name = state
                .registry
                .get(&id)
                .map(|e| e.canonical_name.clone())
                .unwrap_or_else(|| id.to_string());
            AvatarState {
                last_hypothesis_highlight: state.last_hypothesis_mention.as_ref() == Some(&id),
                entity_id: id,
                display_name,
                mention_counts,
                total_mentions: total,
                shade: shade_function(total, cap).expect("cap >= 1"),
            }
        })
        .collect();

    let placeholder_count = if named_avatars.is_empty() {
        START_PLACEHOLDERS
    } else {
        config.trailing_placeholders.max(1)
    };
    VisualizationState {
        named_avatars,
        placeholder_count,
    }
}

/// Changes between two visualizations, as broadcast after each operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualizationDelta {
    /// Avatars that are new or whose values changed.
    pub changed: Vec<AvatarState>,
    pub removed: Vec<EntityId>,
    /// Full named-avatar order after the change.
    pub order: Vec<EntityId>,
    pub placeholder_count: u32,
}

impl VisualizationDelta {
    pub fn is_empty(&self) -> bool {
        self.changed.is_empty() && self.removed.is_empty()
    }
}

impl VisualizationState {
    pub fn avatar(&self, id: &EntityId) -> Option<&AvatarState> {
        self.named_avatars.iter().find(|a| &a.entity_id == id)
    }

    pub fn highlighted(&self) -> Option<&AvatarState> {
        self.named_avatars
            .iter()
            .find(|a| a.last_hypothesis_highlight)
    }

    pub fn diff(&self, next: &VisualizationState) -> VisualizationDelta {
        let changed = next
            .named_avatars
            .iter()
            .filter(|a| self.avatar(&a.entity_id) != Some(*a))
            .cloned()
            .collect();
        let removed = self
            .named_avatars
            .iter()
            .filter(|a| next.avatar(&a.entity_id).is_none())
            .map(|a| a.entity_id.clone())
            .collect();
        VisualizationDelta {
            changed,
            removed,
            order: next
                .named_avatars
                .iter()
                .map(|a| a.entity_id.clone())
                .collect(),
            placeholder_count: next.placeholder_count,
        }
    }

    pub fn apply_delta(&self, delta: &VisualizationDelta) -> VisualizationState {
        let named_avatars = delta
            .order
            .iter()
            .filter_map(|id| {
                delta
                    .changed
                    .iter()
                    .find(|a| &a.entity_id == id)
                    .or_else(|| self.avatar(id))
                    .cloned()
            })
            .collect();
        VisualizationState {
            named_avatars,
            placeholder_count: delta.placeholder_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionDistribution {
    pub fractions: Vec<(EntityId, f64)>,
    /// Shannon entropy of the fractions divided by `ln n`; 0 for fewer than
    /// two named avatars.
    pub normalized_entropy: f64,
}

pub fn attention_distribution(viz: &VisualizationState) -> AttentionDistribution {
    let total: f64 = viz
        .named_avatars
        .iter()
        .map(|a| f64::from(a.total_mentions))
        .sum();
    if total == 0.0 {
        return AttentionDistribution {
            fractions: Vec::new(),
            normalized_entropy: 0.0,
        };
    }
    let fractions: Vec<(EntityId, f64)> = viz
        .named_avatars
        .iter()
        .map(|a| (a.entity_id.clone(), f64::from(a.total_mentions) / total))
        .collect();
    let n = fractions.len();
    let normalized_entropy = if n > 1 {
        let h: f64 = fractions
            .iter()
            .filter(|(_, f)| *f > 0.0)
            .map(|(_, f)| -f * f.ln())
            .sum();
        (h / (n as f64).ln()).clamp(0.0, 1.0)
    } else {
        0.0
    };
    AttentionDistribution {
        fractions,
        normalized_entropy,
    }
}
