//! Person-name detection over workspace text.
//!
//! Known names (gazetteer entries and previously registered names) are
//! matched case-insensitively on word boundaries, leftmost-longest and
//! non-overlapping. Uncovered runs of two or more capitalized words become
//! candidate new persons, and single capitalized words that belong to exactly
//! one known name resolve to that person.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::PersonEntry;
use crate::text::{self, Span, Token};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Gazetteer,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonEntity {
    pub entity_id: EntityId,
    pub canonical_name: String,
    pub aliases: Vec<String>,
    pub origin: Origin,
}

impl PersonEntity {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.canonical_name.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

/// Where a piece of shared text lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Sticky,
    Chat,
    Hypothesis,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Sticky, Channel::Chat, Channel::Hypothesis];
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentionTarget {
    Entity(EntityId),
    /// A capitalized run that matched no known person.
    Candidate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub target: MentionTarget,
    pub span: Span,
    pub surface_text: String,
}

impl Mention {
    pub fn entity(&self) -> Option<&EntityId> {
        match &self.target {
            MentionTarget::Entity(id) => Some(id),
            MentionTarget::Candidate(_) => None,
        }
    }
}

/// A resolved mention located in a workspace artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionEvent {
    pub entity_id: EntityId,
    pub channel: Channel,
    pub artifact_id: u64,
    pub span: Span,
    pub surface_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    /// Report uncovered capitalized runs as candidate new persons.
    pub detect_new_names: bool,
    /// Resolve single capitalized words that belong to exactly one known name.
    pub resolve_partial_names: bool,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            detect_new_names: true,
            resolve_partial_names: true,
        }
    }
}

impl ExtractorConfig {
    /// Known names only: no candidates, no partial resolution.
    pub fn strict() -> Self {
        Self {
            detect_new_names: false,
            resolve_partial_names: false,
        }
    }

    /// The configuration used for counting: candidates are never counted.
    pub fn counting(self) -> Self {
        Self {
            detect_new_names: false,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartialMatch {
    Unique(EntityId),
    Ambiguous,
    None,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRegistry {
    entities: Vec<PersonEntity>,
}

pub(crate) fn normalize_name(name: &str) -> String {
    text::words(name).join(" ")
}

fn heuristic_id(normalized: &str) -> EntityId {
    let digest = Sha256::digest(normalized.as_bytes());
    EntityId(format!("h-{}", &hex::encode(digest)[..16]))
}

impl EntityRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_gazetteer(entries: &[PersonEntry]) -> Self {
        let entities = entries
            .iter()
            .map(|p| PersonEntity {
                entity_id: EntityId(p.entity_id.clone()),
                canonical_name: p.canonical_name.clone(),
                aliases: p.aliases.clone(),
                origin: Origin::Gazetteer,
            })
            .collect();
        Self { entities }
    }

    pub fn entities(&self) -> &[PersonEntity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, id: &EntityId) -> Option<&PersonEntity> {
        self.entities.iter().find(|e| &e.entity_id == id)
    }

    /// Entity whose canonical name or alias equals `name`, ignoring case.
    pub fn find_by_name(&self, name: &str) -> Option<&EntityId> {
        let wanted = normalize_name(name);
        if wanted.is_empty() {
            return None;
        }
        self.entities
            .iter()
            .find(|e| e.names().any(|n| normalize_name(n) == wanted))
            .map(|e| &e.entity_id)
    }

    /// Returns the id for `name`, adding a new entity if it is unknown.
    ///
    /// Returns `None` when the name contains no word characters.
    pub fn register(&mut self, name: &str, origin: Origin) -> Option<EntityId> {
        if let Some(id) = self.find_by_name(name) {
            return Some(id.clone());
        }
        let normalized = normalize_name(name);
        if normalized.is_empty() {
            return None;
        }
        let mut id = heuristic_id(&normalized);
        // astronomically unlikely, but ids must stay unique
        let mut salt = 1u32;
        while self.get(&id).is_some() {
            id = heuristic_id(&format!("{normalized}#{salt}"));
            salt += 1;
        }
        self.entities.push(PersonEntity {
            entity_id: id.clone(),
            canonical_name: name.split_whitespace().collect::<Vec<_>>().join(" "),
            aliases: Vec::new(),
            origin,
        });
        Some(id)
    }

    pub fn resolve_partial_name(&self, token: &str) -> PartialMatch {
        let words = text::words(token);
        let [word] = words.as_slice() else {
            return PartialMatch::None;
        };
        let hits: BTreeSet<&EntityId> = self
            .entities
            .iter()
            .filter(|e| e.names().any(|n| text::words(n).iter().any(|w| w == word)))
            .map(|e| &e.entity_id)
            .collect();
        match hits.len() {
            0 => PartialMatch::None,
            1 => PartialMatch::Unique(hits.into_iter().next().unwrap().clone()),
            _ => PartialMatch::Ambiguous,
        }
    }

    pub fn matcher(&self) -> Matcher<'_> {
        Matcher::new(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Gap {
    Whitespace,
    Literal(String),
}

#[derive(Debug)]
struct Pattern {
    words: Vec<String>,
    gaps: Vec<Gap>,
    entity: usize,
}

/// Precompiled lookup tables over a registry.
#[derive(Debug)]
pub struct Matcher<'r> {
    registry: &'r EntityRegistry,
    by_first_word: HashMap<String, Vec<Pattern>>,
    by_any_word: HashMap<String, BTreeSet<usize>>,
}

fn compile(name: &str, entity: usize) -> Option<Pattern> {
    let tokens = text::tokenize(name);
    if tokens.is_empty() {
        return None;
    }
    let gaps = tokens
        .windows(2)
        .map(|w| {
            let between = &name[w[0].byte_end..w[1].byte_start];
            if between.chars().all(char::is_whitespace) {
                Gap::Whitespace
            } else {
                Gap::Literal(between.to_lowercase())
            }
        })
        .collect();
    Some(Pattern {
        words: tokens.into_iter().map(|t| t.lower).collect(),
        gaps,
        entity,
    })
}

fn gap_text<'t>(text: &'t str, left: &Token<'_>, right: &Token<'_>) -> &'t str {
    &text[left.byte_end..right.byte_start]
}

impl<'r> Matcher<'r> {
    fn new(registry: &'r EntityRegistry) -> Self {
        let mut by_first_word: HashMap<String, Vec<Pattern>> = HashMap::new();
        let mut by_any_word: HashMap<String, BTreeSet<usize>> = HashMap::new();
        for (idx, entity) in registry.entities.iter().enumerate() {
            for name in entity.names() {
                let Some(pattern) = compile(name, idx) else {
                    continue;
                };
                for word in &pattern.words {
                    by_any_word.entry(word.clone()).or_default().insert(idx);
                }
                by_first_word
                    .entry(pattern.words[0].clone())
                    .or_default()
                    .push(pattern);
            }
        }
        Self {
            registry,
            by_first_word,
            by_any_word,
        }
    }

    /// Longest known-name match starting at token `i`: the index of its last
    /// token and the distinct entities matching that exact extent.
    fn longest_at(
        &self,
        text: &str,
        tokens: &[Token<'_>],
        i: usize,
    ) -> Option<(usize, BTreeSet<usize>)> {
        let patterns = self.by_first_word.get(&tokens[i].lower)?;
        let mut best: Option<(usize, BTreeSet<usize>)> = None;
        for p in patterns {
            let last = i + p.words.len() - 1;
            if last >= tokens.len() {
                continue;
            }
            let words_match = p
                .words
                .iter()
                .zip(&tokens[i..=last])
                .all(|(w, t)| *w == t.lower);
            let gaps_match = p.gaps.iter().enumerate().all(|(k, gap)| {
                let between = gap_text(text, &tokens[i + k], &tokens[i + k + 1]);
                match gap {
                    Gap::Whitespace => between.chars().all(char::is_whitespace),
                    Gap::Literal(lit) => between.to_lowercase() == *lit,
                }
            });
            if !(words_match && gaps_match) {
                continue;
            }
            match &mut best {
                Some((end, set)) if *end == last => {
                    set.insert(p.entity);
                }
                Some((end, _)) if *end > last => {}
                _ => best = Some((last, BTreeSet::from([p.entity]))),
            }
        }
        best
    }

    fn partial(&self, word: &str) -> PartialMatch {
        match self.by_any_word.get(word) {
            None => PartialMatch::None,
            Some(set) if set.len() == 1 => {
                let idx = *set.iter().next().unwrap();
                PartialMatch::Unique(self.registry.entities[idx].entity_id.clone())
            }
            Some(_) => PartialMatch::Ambiguous,
        }
    }

    pub fn extract(&self, text: &str, config: ExtractorConfig) -> Vec<Mention> {
        let tokens = text::tokenize(text);
        let mut covered = vec![false; tokens.len()];
        let mut mentions = Vec::new();
        let surface =
            |from: usize, to: usize| text[tokens[from].byte_start..tokens[to].byte_end].to_string();
        let span = |from: usize, to: usize| Span::new(tokens[from].span.start, tokens[to].span.end);

        let mut i = 0;
        while i < tokens.len() {
            match self.longest_at(text, &tokens, i) {
                Some((last, entities)) => {
                    if entities.len() == 1 {
                        let idx = *entities.iter().next().unwrap();
                        mentions.push(Mention {
                            target: MentionTarget::Entity(
                                self.registry.entities[idx].entity_id.clone(),
                            ),
                            span: span(i, last),
                            surface_text: surface(i, last),
                        });
                    }
                    covered[i..=last].iter_mut().for_each(|c| *c = true);
                    i = last + 1;
                }
                None => i += 1,
            }
        }

        if config.detect_new_names {
            for (from, to) in capitalized_runs(text, &tokens, &covered) {
                let name = surface(from, to);
                mentions.push(Mention {
                    target: MentionTarget::Candidate(
                        name.split_whitespace().collect::<Vec<_>>().join(" "),
                    ),
                    span: span(from, to),
                    surface_text: name,
                });
                covered[from..=to].iter_mut().for_each(|c| *c = true);
            }
        }

        if config.resolve_partial_names {
            for (k, tok) in tokens.iter().enumerate() {
                if covered[k] || !tok.is_capitalized() {
                    continue;
                }
                if let PartialMatch::Unique(id) = self.partial(&tok.lower) {
                    mentions.push(Mention {
                        target: MentionTarget::Entity(id),
                        span: tok.span,
                        surface_text: tok.text.to_string(),
                    });
                }
            }
        }

        mentions.sort_by_key(|m| m.span.start);
        mentions
    }
}

/// Capitalized words that never start a person name on their own.
const NON_NAME_WORDS: &[&str] = &[
    "a",
    "an",
    "and",
    "at",
    "but",
    "by",
    "for",
    "from",
    "he",
    "her",
    "his",
    "i",
    "in",
    "it",
    "of",
    "on",
    "or",
    "she",
    "that",
    "the",
    "these",
    "they",
    "this",
    "those",
    "to",
    "we",
    "with",
    "mr",
    "mrs",
    "ms",
    "dr",
    "det",
    "detective",
    "officer",
    "sgt",
    "sergeant",
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

fn is_sentence_initial(text: &str, tokens: &[Token<'_>], k: usize) -> bool {
    if k == 0 {
        return true;
    }
    gap_text(text, &tokens[k - 1], &tokens[k])
        .chars()
        .any(|c| matches!(c, '.' | '!' | '?' | ':' | '\n'))
}

/// Maximal runs (inclusive token ranges) of at least two uncovered
/// capitalized words separated only by spaces. A sentence-initial first word
/// is dropped when at least two words remain.
fn capitalized_runs(text: &str, tokens: &[Token<'_>], covered: &[bool]) -> Vec<(usize, usize)> {
    let eligible = |k: usize| {
        !covered[k]
            && tokens[k].is_capitalized()
            && !NON_NAME_WORDS.contains(&tokens[k].lower.as_str())
    };
    let joined = |k: usize| {
        let gap = gap_text(text, &tokens[k - 1], &tokens[k]);
        gap.chars().all(|c| c == ' ' || c == '\t')
    };
    let mut runs = Vec::new();
    let mut k = 0;
    while k < tokens.len() {
        if !eligible(k) {
            k += 1;
            continue;
        }
        let mut end = k;
        while end + 1 < tokens.len() && eligible(end + 1) && joined(end + 1) {
            end += 1;
        }
        let mut start = k;
        if end - start >= 2 && is_sentence_initial(text, tokens, start) {
            start += 1;
        }
        if end > start {
            runs.push((start, end));
        }
        k = end + 1;
    }
    runs
}

/// Detects person mentions in `text`. Pure: same inputs, same output.
pub fn extract_mentions(
    text: &str,
    registry: &EntityRegistry,
    config: ExtractorConfig,
) -> Vec<Mention> {
    registry.matcher().extract(text, config)
}
