//! Document connection graph: TF/IDF over person mentions, cosine similarity,
//! thresholded undirected edges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document};
use crate::entity::{EntityId, EntityRegistry, ExtractorConfig};

pub const DEFAULT_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityVector {
    pub doc_id: String,
    pub weights: BTreeMap<EntityId, f64>,
}

impl EntityVector {
    pub fn norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGraph {
    pub threshold: f64,
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("threshold {0} is outside [0, 1]")]
pub struct InvalidThreshold(pub f64);

/// Gazetteer mentions per entity in one document body.
pub fn entity_term_counts(
    document: &Document,
    registry: &EntityRegistry,
) -> BTreeMap<EntityId, u32> {
    let config = ExtractorConfig::default().counting();
    let mut counts = BTreeMap::new();
    for mention in registry.matcher().extract(&document.body, config) {
        if let Some(id) = mention.entity() {
            *counts.entry(id.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// `weight(d, e) = count(d, e) * ln(N / df(e))`.
pub fn tfidf_from_counts(counts: &[(String, BTreeMap<EntityId, u32>)]) -> Vec<EntityVector> {
    let n = counts.len() as f64;
    let mut df: BTreeMap<&EntityId, u32> = BTreeMap::new();
    for (_, doc_counts) in counts {
        for (id, &c) in doc_counts {
            if c > 0 {
                *df.entry(id).or_insert(0) += 1;
            }
        }
    }
    counts
        .iter()
        .map(|(doc_id, doc_counts)| EntityVector {
            doc_id: doc_id.clone(),
            weights: doc_counts
                .iter()
                .filter(|(_, &c)| c > 0)
                .map(|(id, &c)| (id.clone(), f64::from(c) * (n / f64::from(df[id])).ln()))
                .collect(),
        })
        .collect()
}

pub fn tfidf_vectors(documents: &[Document], registry: &EntityRegistry) -> Vec<EntityVector> {
    let counts: Vec<_> = documents
        .iter()
        .map(|d| (d.doc_id.clone(), entity_term_counts(d, registry)))
        .collect();
    tfidf_from_counts(&counts)
}

/// Cosine similarity of two sparse vectors; 0 when either is all-zero.
pub fn cosine(a: &EntityVector, b: &EntityVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a
        .weights
        .iter()
        .filter_map(|(id, wa)| b.weights.get(id).map(|wb| wa * wb))
        .sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

pub fn build_graph(
    vectors: &[EntityVector],
    threshold: f64,
) -> Result<ConnectionGraph, InvalidThreshold> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(InvalidThreshold(threshold));
    }
    let mut edges = Vec::new();
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i + 1..] {
            let similarity = cosine(a, b);
            if similarity >= threshold {
                edges.push(Edge {
                    a: a.doc_id.clone(),
                    b: b.doc_id.clone(),
                    similarity,
                });
            }
        }
    }
    Ok(ConnectionGraph {
        threshold,
        nodes: vectors.iter().map(|v| v.doc_id.clone()).collect(),
        edges,
    })
}

/// Graph over every document of the corpus using its gazetteer.
pub fn corpus_graph(corpus: &Corpus, threshold: f64) -> Result<ConnectionGraph, InvalidThreshold> {
    let registry = EntityRegistry::from_gazetteer(corpus.gazetteer());
    build_graph(&tfidf_vectors(corpus.documents(), &registry), threshold)
}

impl ConnectionGraph {
    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        self.edges
            .iter()
            .find(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
            .map(|e| e.similarity)
    }

    /// Adjacency-list export consumed by clients and the replay tool.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }
}
