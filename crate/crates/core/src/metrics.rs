//! Metrics and visualization trajectories computed by replaying a session log.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::entity::EntityId;
use crate::role::Role;
use crate::sync::{replay_with, Condition, ReplayError, SessionLog};
use crate::translucence::{
    attention_distribution, visualization_from_counts, AttentionDistribution, ChannelCounts,
    MentionCounter, VisualizationState,
};
use crate::workspace::{HypothesisStatus, WorkspaceState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyzeOptions {
    pub trajectory: bool,
    /// Record a trajectory step every `sample_every` accepted operations.
    pub sample_every: u64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            trajectory: false,
            sample_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMetric {
    pub entity_id: EntityId,
    pub display_name: String,
    pub counts: ChannelCounts,
    pub total: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub open: u32,
    pub accepted: u32,
    pub rejected: u32,
    pub needs_more_info: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub ops_applied: u64,
    /// Final per-entity mention counts, in avatar order.
    pub entity_mentions: Vec<EntityMetric>,
    /// Normalized attention entropy after each applied operation.
    pub attention_entropy: Vec<f64>,
    pub final_attention: AttentionDistribution,
    pub hypothesis_status: StatusCounts,
    pub confirming_evidence: u32,
    pub disconfirming_evidence: u32,
    pub clues_covered: Vec<String>,
    /// The solution entity was mentioned at some point during the session.
    pub culprit_mentioned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub seq: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actor: Option<Role>,
    pub visualization: VisualizationState,
    pub clues_covered: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub session_id: String,
    pub corpus_id: String,
    pub condition: Condition,
    pub final_seq: u64,
    pub final_hash: String,
    pub metrics: SessionMetrics,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: ReplayReport,
    pub trajectory: Vec<TrajectoryStep>,
    pub final_state: WorkspaceState,
}

fn clues(corpus: &Corpus, state: &WorkspaceState) -> Vec<String> {
    let texts: Vec<&str> = state.shared_texts().iter().map(|t| t.text).collect();
    corpus.clue_coverage(&texts).into_iter().collect()
}

pub fn analyze(
    log: &SessionLog,
    corpus: &Corpus,
    options: AnalyzeOptions,
) -> Result<Analysis, ReplayError> {
    let viz_config = log.header.viz;
    let every = options.sample_every.max(1);
    let solution = EntityId::new(corpus.solution());
    let mut counter = MentionCounter::default();
    let mut entropy = Vec::with_capacity(log.ops.len());
    let mut culprit_mentioned = false;
    let mut trajectory = Vec::new();

    if options.trajectory {
        trajectory.push(TrajectoryStep {
            seq: 0,
            op_id: None,
            op_kind: None,
            actor: None,
            visualization: VisualizationState::default(),
            clues_covered: Vec::new(),
        });
    }

    let final_state = replay_with(log, corpus, |op, state| {
        let viz = visualization_from_counts(state, counter.counts(state), &viz_config);
        entropy.push(attention_distribution(&viz).normalized_entropy);
        culprit_mentioned |= viz.avatar(&solution).is_some();
        if options.trajectory && state.applied_seq % every == 0 {
            trajectory.push(TrajectoryStep {
                seq: state.applied_seq,
                op_id: Some(op.op_id.clone()),
                op_kind: Some(op.kind.name().to_string()),
                actor: Some(op.actor),
                visualization: viz,
                clues_covered: clues(corpus, state),
            });
        }
    })?;

    let final_viz =
        visualization_from_counts(&final_state, counter.counts(&final_state), &viz_config);
    let mut status = StatusCounts::default();
    let (mut confirming, mut disconfirming) = (0, 0);
    for h in final_state.hypotheses.values() {
        match h.status {
            HypothesisStatus::Open => status.open += 1,
            HypothesisStatus::Accepted => status.accepted += 1,
            HypothesisStatus::Rejected => status.rejected += 1,
            HypothesisStatus::NeedsMoreInfo => status.needs_more_info += 1,
        }
        confirming += h.confirming.len() as u32;
        disconfirming += h.disconfirming.len() as u32;
    }

    let metrics = SessionMetrics {
        ops_applied: final_state.applied_seq,
        entity_mentions: final_viz
            .named_avatars
            .iter()
            .map(|a| EntityMetric {
                entity_id: a.entity_id.clone(),
                display_name: a.display_name.clone(),
                counts: a.mention_counts,
                total: a.total_mentions,
            })
            .collect(),
        attention_entropy: entropy,
        final_attention: attention_distribution(&final_viz),
        hypothesis_status: status,
        confirming_evidence: confirming,
        disconfirming_evidence: disconfirming,
        clues_covered: clues(corpus, &final_state),
        culprit_mentioned,
    };
    let report = ReplayReport {
        session_id: log.header.session_id.clone(),
        corpus_id: log.header.corpus_id.clone(),
        condition: log.header.condition,
        final_seq: final_state.applied_seq,
        final_hash: final_state.hash(),
        metrics,
    };
    Ok(Analysis {
        report,
        trajectory,
        final_state,
    })
}

impl ReplayReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    /// Plain-text summary for humans.
    pub fn summary_text(&self) -> String {
        let m = &self.metrics;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "session {} on corpus {} ({})",
            self.session_id, self.corpus_id, self.condition
        );
        let _ = writeln!(out, "operations applied: {}", m.ops_applied);
        let _ = writeln!(out, "final state hash: {}", self.final_hash);
        let _ = writeln!(out, "mentions (sticky/chat/hypothesis = total):");
        if m.entity_mentions.is_empty() {
            let _ = writeln!(out, "  none");
        }
        for e in &m.entity_mentions {
            let _ = writeln!(
                out,
                "  {:<24} {}/{}/{} = {}",
                e.display_name, e.counts.sticky, e.counts.chat, e.counts.hypothesis, e.total
            );
        }
        let _ = writeln!(
            out,
            "final attention entropy: {:.4}",
            m.final_attention.normalized_entropy
        );
        let s = m.hypothesis_status;
        let _ = writeln!(
            out,
            "hypotheses: open {}, accepted {}, rejected {}, needs more info {}",
            s.open, s.accepted, s.rejected, s.needs_more_info
        );
        let _ = writeln!(
            out,
            "evidence: {} confirming, {} disconfirming",
            m.confirming_evidence, m.disconfirming_evidence
        );
        let clues = if m.clues_covered.is_empty() {
            "none".to_string()
        } else {
            m.clues_covered.join(", ")
        };
        let _ = writeln!(out, "clues covered: {clues}");
        let _ = writeln!(
            out,
            "culprit mentioned: {}",
            if m.culprit_mentioned { "yes" } else { "no" }
        );
        out
    }
}
