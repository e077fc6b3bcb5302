//! Task corpus: case documents, the person gazetteer, the clue manifest and
//! the per-analyst document split.
//!
//! On disk a corpus is a directory holding `manifest.json` and one plain-text
//! file per document (conventionally `docs/<doc_id>.txt`). The corpus is
//! immutable once loaded.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::role::{AssignedRole, Role};
use crate::text;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest not found in {}", .0.display())]
    ManifestNotFound(PathBuf),
    #[error("failed to access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed manifest: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported manifest version {0} (expected {MANIFEST_VERSION})")]
    UnsupportedVersion(u32),
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("document `{doc_id}` references unknown case `{case_id}`")]
    UnknownCase { doc_id: String, case_id: String },
    #[error("solution entity `{0}` is not in the gazetteer")]
    UnknownSolution(String),
    #[error("document `{doc_id}` file not found: {}", path.display())]
    MissingDocument { doc_id: String, path: PathBuf },
    #[error("document `{doc_id}` has an invalid file path `{file}`")]
    InvalidPath { doc_id: String, file: String },
    #[error("document `{0}` has an empty body")]
    EmptyDocument(String),
    #[error("document `{0}` is not valid UTF-8")]
    NotUtf8(String),
    #[error("person `{entity_id}`: {reason}")]
    InvalidPerson { entity_id: String, reason: String },
    #[error("clue `{0}` has no usable keyword set")]
    InvalidClue(String),
    #[error("document `{0}` has no body supplied")]
    MissingBody(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseDescriptor {
    pub case_id: String,
    pub title: String,
    pub is_cold: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentDescriptor {
    pub doc_id: String,
    pub case_id: String,
    pub title: String,
    pub file: String,
    pub assigned_role: AssignedRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonEntry {
    pub entity_id: String,
    pub canonical_name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClueDescriptor {
    pub clue_id: String,
    pub description: String,
    /// A clue is surfaced when every keyword of any one set appears.
    pub keyword_sets: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub version: u32,
    pub corpus_id: String,
    pub cases: Vec<CaseDescriptor>,
    pub documents: Vec<DocumentDescriptor>,
    pub gazetteer: Vec<PersonEntry>,
    pub clues: Vec<ClueDescriptor>,
    pub solution: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub case_id: String,
    pub title: String,
    pub body: String,
    pub assigned_role: AssignedRole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    manifest: CorpusManifest,
    documents: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus from a manifest and bodies in manifest order.
    pub fn from_parts(manifest: CorpusManifest, bodies: Vec<String>) -> Result<Self, CorpusError> {
        validate_manifest(&manifest)?;
        if bodies.len() < manifest.documents.len() {
            return Err(CorpusError::MissingBody(
                manifest.documents[bodies.len()].doc_id.clone(),
            ));
        }
        let documents = manifest
            .documents
            .iter()
            .zip(bodies)
            .map(|(desc, body)| {
                if body.trim().is_empty() {
                    return Err(CorpusError::EmptyDocument(desc.doc_id.clone()));
                }
                Ok(Document {
                    doc_id: desc.doc_id.clone(),
                    case_id: desc.case_id.clone(),
                    title: desc.title.clone(),
                    body,
                    assigned_role: desc.assigned_role,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            manifest,
            documents,
        })
    }

    pub fn load(root: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let root = root.as_ref();
        let manifest_path = root.join(MANIFEST_FILE);
        let raw = match fs::read(&manifest_path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(CorpusError::ManifestNotFound(root.to_path_buf()))
            }
            Err(source) => {
                return Err(CorpusError::Io {
                    path: manifest_path,
                    source,
                })
            }
        };
        let manifest: CorpusManifest = serde_json::from_slice(&raw)?;
        validate_manifest(&manifest)?;

        let mut bodies = Vec::with_capacity(manifest.documents.len());
        for desc in &manifest.documents {
            let path = root.join(&desc.file);
            let bytes = match fs::read(&path) {
                Ok(bytes) => bytes,
                Err(e) if e.kind() == io::ErrorKind::NotFound => {
                    return Err(CorpusError::MissingDocument {
                        doc_id: desc.doc_id.clone(),
                        path,
                    })
                }
                Err(source) => return Err(CorpusError::Io { path, source }),
            };
            let body =
                String::from_utf8(bytes).map_err(|_| CorpusError::NotUtf8(desc.doc_id.clone()))?;
            bodies.push(body);
        }
        Self::from_parts(manifest, bodies)
    }

    /// Writes the corpus so that [`Corpus::load`] returns an equal value.
    pub fn save(&self, root: impl AsRef<Path>) -> Result<(), CorpusError> {
        let root = root.as_ref();
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };
        fs::create_dir_all(root).map_err(io_err(root))?;
        let manifest_path = root.join(MANIFEST_FILE);
        fs::write(&manifest_path, self.manifest_text()).map_err(io_err(&manifest_path))?;
        for (desc, doc) in self.manifest.documents.iter().zip(&self.documents) {
            let path = root.join(&desc.file);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            fs::write(&path, &doc.body).map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// Canonical manifest serialization (pretty JSON with a trailing newline).
    pub fn manifest_text(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        out.push('\n');
        out
    }

    pub fn id(&self) -> &str {
        &self.manifest.corpus_id
    }

    pub fn manifest(&self) -> &CorpusManifest {
        &self.manifest
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn gazetteer(&self) -> &[PersonEntry] {
        &self.manifest.gazetteer
    }

    pub fn solution(&self) -> &str {
        &self.manifest.solution
    }

    /// Documents visible to `role`: its own plus those assigned to both.
    pub fn documents_for_role(&self, role: Role) -> Vec<&Document> {
        self.documents
            .iter()
            .filter(|d| d.assigned_role.includes(role))
            .collect()
    }

    /// Clues whose keyword sets are fully present in the shared texts.
    ///
    /// Matching is case-insensitive on whole words. A multi-word keyword must
    /// appear as a contiguous phrase inside one text; the keywords of a set
    /// may be spread over different texts.
    pub fn clue_coverage<S: AsRef<str>>(&self, shared_texts: &[S]) -> BTreeSet<String> {
        let texts: Vec<Vec<String>> = shared_texts
            .iter()
            .map(|t| text::words(t.as_ref()))
            .collect();
        let present = |kw: &str| {
            let phrase = text::words(kw);
            texts
                .iter()
                .any(|words| text::contains_phrase(words, &phrase))
        };
        self.manifest
            .clues
            .iter()
            .filter(|clue| {
                clue.keyword_sets
                    .iter()
                    .any(|set| set.iter().all(|kw| present(kw)))
            })
            .map(|clue| clue.clue_id.clone())
            .collect()
    }
}

fn check_unique<'a>(
    kind: &'static str,
    ids: impl IntoIterator<Item = &'a str>,
) -> Result<(), CorpusError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CorpusError::DuplicateId {
                kind,
                id: id.to_string(),
            });
        }
    }
    Ok(())
}

fn is_safe_relative(file: &str) -> bool {
    let path = Path::new(file);
    !file.is_empty()
        && path
            .components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
}

fn validate_manifest(m: &CorpusManifest) -> Result<(), CorpusError> {
    if m.version != MANIFEST_VERSION {
        return Err(CorpusError::UnsupportedVersion(m.version));
    }
    check_unique("case", m.cases.iter().map(|c| c.case_id.as_str()))?;
    check_unique("document", m.documents.iter().map(|d| d.doc_id.as_str()))?;
    check_unique("entity", m.gazetteer.iter().map(|p| p.entity_id.as_str()))?;
    check_unique("clue", m.clues.iter().map(|c| c.clue_id.as_str()))?;

    for doc in &m.documents {
        if !m.cases.iter().any(|c| c.case_id == doc.case_id) {
            return Err(CorpusError::UnknownCase {
                doc_id: doc.doc_id.clone(),
                case_id: doc.case_id.clone(),
            });
        }
        if !is_safe_relative(&doc.file) {
            return Err(CorpusError::InvalidPath {
                doc_id: doc.doc_id.clone(),
                file: doc.file.clone(),
            });
        }
    }
    for person in &m.gazetteer {
        let invalid = |reason: &str| CorpusError::InvalidPerson {
            entity_id: person.entity_id.clone(),
            reason: reason.to_string(),
        };
        if text::words(&person.canonical_name).is_empty() {
            return Err(invalid("canonical name is empty"));
        }
        let mut names = HashSet::new();
        names.insert(person.canonical_name.to_lowercase());
        for alias in &person.aliases {
            if text::words(alias).is_empty() {
                return Err(invalid("alias is empty"));
            }
            if !names.insert(alias.to_lowercase()) {
                return Err(invalid(&format!("alias `{alias}` repeats another name")));
            }
        }
    }
    for clue in &m.clues {
        let usable = !clue.keyword_sets.is_empty()
            && clue
                .keyword_sets
                .iter()
                .all(|set| !set.is_empty() && set.iter().all(|kw| !text::words(kw).is_empty()));
        if !usable {
            return Err(CorpusError::InvalidClue(clue.clue_id.clone()));
        }
    }
    if !m.gazetteer.iter().any(|p| p.entity_id == m.solution) {
        return Err(CorpusError::UnknownSolution(m.solution.clone()));
    }
    Ok(())
}
