//! Core of a two-analyst collaborative crime-analysis workbench.
//!
//! - [`corpus`]: case documents, person gazetteer, clue manifest.
//! - [`entity`]: person-name mention detection and the entity registry.
//! - [`graph`]: TF/IDF document connection graph.
//! - [`workspace`]: the shared Analysis Space state and its reducer.
//! - [`translucence`]: the suspect visualization derived from that state.
//! - [`sync`]: sequencing, persistence and replay of the operation log.
//! - [`wire`]: live protocol messages.
//! - [`metrics`]: replay metrics and visualization trajectories.

pub mod corpus;
pub mod entity;
pub mod graph;
pub mod metrics;
pub mod role;
pub mod sync;
pub mod text;
pub mod translucence;
pub mod wire;
pub mod workspace;

#[cfg(test)]
pub(crate) mod testing;

pub use corpus::{Corpus, CorpusError, CorpusManifest, Document};
pub use entity::{
    extract_mentions, Channel, EntityId, EntityRegistry, ExtractorConfig, Mention, MentionEvent,
    PersonEntity,
};
pub use graph::{build_graph, tfidf_vectors, ConnectionGraph};
pub use role::{AssignedRole, Role};
pub use sync::{
    replay, Condition, Operation, SessionCore, SessionHeader, SessionLog, Snapshot, Submitted,
    Verdict,
};
pub use translucence::{derive_visualization, shade_function, VisualizationState, VizConfig};
pub use workspace::{OpKind, WorkspaceState};
