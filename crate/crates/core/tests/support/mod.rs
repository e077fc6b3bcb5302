//! Independent oracles and random generators shared by integration tests.
//!
//! Nothing here calls the extractor, the reducer's mention logic or the
//! TF/IDF code under test; results are computed from first principles.
#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use regex::Regex;
use translucent_core::corpus::{
    CaseDescriptor, ClueDescriptor, CorpusManifest, DocumentDescriptor, PersonEntry,
};
use translucent_core::workspace::{HypothesisStatus, OpKind};
use translucent_core::{AssignedRole, Corpus, Operation, Role, WorkspaceState};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn mini_corpus() -> Corpus {
    Corpus::load(fixtures_dir().join("mini-corpus")).expect("mini corpus loads")
}

// ---------------------------------------------------------------------------
// Mention oracle: a character-level scan, written without the tokenizer.

fn alnum(c: char) -> bool {
    c.is_alphanumeric()
}

fn lower(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

/// Lowercased words joined by single spaces.
pub fn key_of(name: &str) -> String {
    name.split(|c: char| !alnum(c))
        .filter(|w| !w.is_empty())
        .map(|w| w.chars().map(lower).collect::<String>())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone)]
pub struct OracleEntity {
    pub names: Vec<String>,
}

impl OracleEntity {
    fn has_key(&self, key: &str) -> bool {
        self.names.iter().any(|n| key_of(n) == key)
    }

    fn has_word(&self, word: &str) -> bool {
        self.names
            .iter()
            .any(|n| key_of(n).split(' ').any(|w| w == word))
    }
}

pub fn entities_from_gazetteer(gazetteer: &[PersonEntry]) -> Vec<OracleEntity> {
    gazetteer
        .iter()
        .map(|p| OracleEntity {
            names: std::iter::once(p.canonical_name.clone())
                .chain(p.aliases.clone())
                .collect(),
        })
        .collect()
}

struct NamePattern {
    words: Vec<Vec<char>>,
    /// `None` for an all-whitespace gap, else the lowercased literal.
    gaps: Vec<Option<Vec<char>>>,
}

fn pattern(name: &str) -> Option<NamePattern> {
    let chars: Vec<char> = name.chars().collect();
    let mut words = Vec::new();
    let mut gaps = Vec::new();
    let mut i = 0;
    while i < chars.len() && !alnum(chars[i]) {
        i += 1;
    }
    while i < chars.len() {
        let ws = i;
        while i < chars.len() && alnum(chars[i]) {
            i += 1;
        }
        words.push(chars[ws..i].iter().map(|c| lower(*c)).collect::<Vec<_>>());
        let gs = i;
        while i < chars.len() && !alnum(chars[i]) {
            i += 1;
        }
        if i < chars.len() {
            let gap = &chars[gs..i];
            gaps.push(if gap.iter().all(|c| c.is_whitespace()) {
                None
            } else {
                Some(gap.iter().map(|c| lower(*c)).collect())
            });
        }
    }
    (!words.is_empty()).then_some(NamePattern { words, gaps })
}

fn match_at(chars: &[char], p: usize, name: &NamePattern) -> Option<usize> {
    let n = chars.len();
    let mut q = p;
    for (i, word) in name.words.iter().enumerate() {
        if i > 0 {
            let gs = q;
            while q < n && !alnum(chars[q]) {
                q += 1;
            }
            if q == n {
                return None;
            }
            let gap = &chars[gs..q];
            let ok = match &name.gaps[i - 1] {
                None => gap.iter().all(|c| c.is_whitespace()),
                Some(lit) => gap.iter().map(|c| lower(*c)).collect::<Vec<_>>() == *lit,
            };
            if !ok {
                return None;
            }
        }
        for &c in word {
            if q >= n || lower(chars[q]) != c {
                return None;
            }
            q += 1;
        }
        if q < n && alnum(chars[q]) {
            return None;
        }
    }
    Some(q)
}

fn word_start(chars: &[char], p: usize) -> bool {
    alnum(chars[p]) && (p == 0 || !alnum(chars[p - 1]))
}

fn word_end(chars: &[char], p: usize) -> usize {
    let mut q = p;
    while q < chars.len() && alnum(chars[q]) {
        q += 1;
    }
    q
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OTarget {
    Entity(usize),
    Candidate(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OMention {
    pub target: OTarget,
    pub start: usize,
    pub end: usize,
}

/// Capitalized words that never count toward a new name.
pub const STOPLIST: &[&str] = &[
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

/// Runs of two or more capitalized, uncovered, non-stoplist words joined by
/// spaces or tabs, found with a regex over a masked copy of the text.
fn regex_candidates(chars: &[char], covered: &[bool]) -> Vec<(usize, usize)> {
    let mut masked: Vec<char> = chars.to_vec();
    let mut p = 0;
    while p < chars.len() {
        if word_start(chars, p) {
            let e = word_end(chars, p);
            let w: String = chars[p..e].iter().map(|c| lower(*c)).collect();
            if covered[p] || STOPLIST.contains(&w.as_str()) {
                masked[p] = lower(chars[p]);
                // an uppercase letter that lowercases to itself cannot be masked
                if masked[p].is_uppercase() {
                    masked[p] = 'x';
                }
            }
            p = e;
        } else {
            p += 1;
        }
    }
    let text: String = masked.iter().collect();
    static RUNS: OnceLock<Regex> = OnceLock::new();
    let re = RUNS.get_or_init(|| {
        Regex::new(r"\b\p{Lu}[\p{L}\p{N}]*(?:[ \t]+\p{Lu}[\p{L}\p{N}]*)+").unwrap()
    });
    let byte_to_char = |b: usize| text[..b].chars().count();
    let mut out = Vec::new();
    for m in re.find_iter(&text) {
        let start = byte_to_char(m.start());
        let end = byte_to_char(m.end());
        let word_starts: Vec<usize> = (start..end).filter(|&q| word_start(chars, q)).collect();
        let mut s = start;
        if word_starts.len() >= 3 {
            let before = &chars[..start];
            let gap_start = before.iter().rposition(|c| alnum(*c)).map(|i| i + 1);
            let initial = match gap_start {
                None => true,
                Some(g) => before[g..]
                    .iter()
                    .any(|c| matches!(c, '.' | '!' | '?' | ':' | '\n')),
            };
            if initial {
                s = word_starts[1];
            }
        }
        out.push((s, end));
    }
    out
}

/// Mentions in `text` against `entities`, sorted by start.
pub fn oracle_extract(
    text: &str,
    entities: &[OracleEntity],
    detect: bool,
    partial: bool,
) -> Vec<OMention> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let patterns: Vec<(usize, NamePattern)> = entities
        .iter()
        .enumerate()
        .flat_map(|(i, e)| {
            e.names
                .iter()
                .filter_map(move |name| pattern(name).map(|p| (i, p)))
        })
        .collect();
    let mut covered = vec![false; n];
    let mut out = Vec::new();

    let mut p = 0;
    while p < n {
        if !word_start(&chars, p) {
            p += 1;
            continue;
        }
        let ends: Vec<(usize, usize)> = patterns
            .iter()
            .filter_map(|(i, pat)| match_at(&chars, p, pat).map(|e| (*i, e)))
            .collect();
        match ends.iter().map(|(_, e)| *e).max() {
            Some(best) => {
                let mut who: Vec<usize> = ends
                    .iter()
                    .filter(|(_, e)| *e == best)
                    .map(|(i, _)| *i)
                    .collect();
                who.sort();
                who.dedup();
                if who.len() == 1 {
                    out.push(OMention {
                        target: OTarget::Entity(who[0]),
                        start: p,
                        end: best,
                    });
                }
                covered[p..best].iter_mut().for_each(|c| *c = true);
                p = best;
            }
            None => p += 1,
        }
    }

    if detect {
        for (s, e) in regex_candidates(&chars, &covered) {
            let surface: String = chars[s..e].iter().collect();
            out.push(OMention {
                target: OTarget::Candidate(
                    surface.split_whitespace().collect::<Vec<_>>().join(" "),
                ),
                start: s,
                end: e,
            });
            covered[s..e].iter_mut().for_each(|c| *c = true);
        }
    }

    if partial {
        let mut p = 0;
        while p < n {
            if !word_start(&chars, p) {
                p += 1;
                continue;
            }
            let e = word_end(&chars, p);
            if !covered[p] && chars[p].is_uppercase() {
                let word: String = chars[p..e].iter().map(|c| lower(*c)).collect();
                let who: Vec<usize> = (0..entities.len())
                    .filter(|&i| entities[i].has_word(&word))
                    .collect();
                if who.len() == 1 {
                    out.push(OMention {
                        target: OTarget::Entity(who[0]),
                        start: p,
                        end: e,
                    });
                }
            }
            p = e;
        }
    }

    out.sort_by_key(|m| m.start);
    out
}

// ---------------------------------------------------------------------------
// Workspace mention model: follows accepted operations and recounts from the
// texts it tracked itself.

#[derive(Debug, Clone, Default)]
struct OHypothesis {
    text: String,
    evidence: Vec<String>,
    comment: String,
}

#[derive(Debug, Clone)]
pub struct OracleModel {
    pub entities: Vec<OracleEntity>,
    stickies: BTreeMap<u64, String>,
    chat: BTreeMap<u64, String>,
    hypotheses: BTreeMap<u64, OHypothesis>,
    pub order: Vec<usize>,
    pub highlight: Option<usize>,
    detect: bool,
    partial: bool,
    /// Entity indices found in a text, valid while `entities` keeps its length.
    memo: RefCell<(usize, HashMap<String, Vec<usize>>)>,
}

impl OracleModel {
    pub fn new(corpus: &Corpus, detect: bool, partial: bool) -> Self {
        Self {
            entities: entities_from_gazetteer(corpus.gazetteer()),
            stickies: BTreeMap::new(),
            chat: BTreeMap::new(),
            hypotheses: BTreeMap::new(),
            order: Vec::new(),
            highlight: None,
            detect,
            partial,
            memo: RefCell::new((0, HashMap::new())),
        }
    }

    fn scan(&mut self, text: &str, hypothesis: bool) {
        let mut last = None;
        for m in oracle_extract(text, &self.entities, self.detect, self.partial) {
            let idx = match m.target {
                OTarget::Entity(i) => i,
                OTarget::Candidate(name) => {
                    let key = key_of(&name);
                    match self.entities.iter().position(|e| e.has_key(&key)) {
                        Some(i) => i,
                        None => {
                            self.entities.push(OracleEntity { names: vec![name] });
                            self.entities.len() - 1
                        }
                    }
                }
            };
            if !self.order.contains(&idx) {
                self.order.push(idx);
            }
            last = Some(idx);
        }
        if hypothesis && last.is_some() {
            self.highlight = last;
        }
    }

    /// Feeds one accepted, sequenced operation.
    pub fn apply(&mut self, op: &Operation, corpus: &Corpus) {
        let seq = op.seq.expect("accepted operations carry a seq");
        match &op.kind {
            OpKind::CreateSticky { text, .. } => {
                self.scan(text, false);
                self.stickies.insert(seq, text.clone());
            }
            OpKind::EditSticky { sticky_id, text } => {
                self.scan(text, false);
                self.stickies.insert(*sticky_id, text.clone());
            }
            OpKind::DeleteSticky { sticky_id } => {
                self.stickies.remove(sticky_id);
            }
            OpKind::PostChat { text } => {
                self.scan(text, false);
                self.chat.insert(seq, text.clone());
            }
            OpKind::CreateAnnotation {
                doc_id,
                start,
                end,
                note,
            } => {
                let body = &corpus.document(doc_id).unwrap().body;
                let quote: String = body.chars().skip(*start).take(end - start).collect();
                let note = note.trim();
                let text = if note.is_empty() {
                    format!("\"{quote}\"")
                } else {
                    format!("\"{quote}\"\n{note}")
                };
                self.scan(&text, false);
                self.stickies.insert(seq, text);
            }
            OpKind::CreateHypothesis { text } => {
                self.scan(text, true);
                self.hypotheses.insert(
                    seq,
                    OHypothesis {
                        text: text.clone(),
                        ..Default::default()
                    },
                );
            }
            OpKind::EditHypothesisText {
                hypothesis_id,
                text,
            } => {
                self.scan(text, true);
                self.hypotheses.get_mut(hypothesis_id).unwrap().text = text.clone();
            }
            OpKind::AddConfirming {
                hypothesis_id,
                text,
            }
            | OpKind::AddDisconfirming {
                hypothesis_id,
                text,
            } => {
                self.scan(text, true);
                self.hypotheses
                    .get_mut(hypothesis_id)
                    .unwrap()
                    .evidence
                    .push(text.clone());
            }
            OpKind::SetStatusComment {
                hypothesis_id,
                comment,
            } => {
                self.scan(comment, true);
                self.hypotheses.get_mut(hypothesis_id).unwrap().comment = comment.clone();
            }
            _ => {}
        }
    }

    /// `[sticky, chat, hypothesis]` mention counts per entity index.
    pub fn counts(&self) -> BTreeMap<usize, [u32; 3]> {
        let mut texts: Vec<(usize, &str)> = Vec::new();
        texts.extend(self.stickies.values().map(|t| (0, t.as_str())));
        texts.extend(self.chat.values().map(|t| (1, t.as_str())));
        for h in self.hypotheses.values() {
            texts.push((2, &h.text));
            texts.extend(h.evidence.iter().map(|t| (2, t.as_str())));
            texts.push((2, &h.comment));
        }
        let mut memo = self.memo.borrow_mut();
        if memo.0 != self.entities.len() {
            *memo = (self.entities.len(), HashMap::new());
        }
        let mut counts: BTreeMap<usize, [u32; 3]> = BTreeMap::new();
        for (channel, text) in texts {
            let found = memo.1.entry(text.to_string()).or_insert_with(|| {
                oracle_extract(text, &self.entities, false, self.partial)
                    .into_iter()
                    .filter_map(|m| match m.target {
                        OTarget::Entity(i) => Some(i),
                        OTarget::Candidate(_) => None,
                    })
                    .collect()
            });
            for &i in found.iter() {
                counts.entry(i).or_default()[channel] += 1;
            }
        }
        counts
    }
}

/// Compares a live visualization against the model; returns a description
/// of the first disagreement.
pub fn check_against_model(
    model: &OracleModel,
    state: &WorkspaceState,
    viz: &translucent_core::VisualizationState,
    cap: u32,
) -> Result<(), String> {
    let registry = state.registry.entities();
    if registry.len() != model.entities.len() {
        return Err(format!(
            "registry has {} entities, oracle {}",
            registry.len(),
            model.entities.len()
        ));
    }
    for (i, (e, o)) in registry.iter().zip(&model.entities).enumerate() {
        let names: Vec<String> = e.names().map(key_of).collect();
        let expected: Vec<String> = o.names.iter().map(|n| key_of(n)).collect();
        if names != expected {
            return Err(format!("entity {i}: names {names:?}, oracle {expected:?}"));
        }
    }
    let index =
        |id: &translucent_core::EntityId| registry.iter().position(|e| &e.entity_id == id).unwrap();
    let counts = model.counts();
    let mut seen = BTreeMap::new();
    for a in &viz.named_avatars {
        let c = a.mention_counts;
        seen.insert(index(&a.entity_id), [c.sticky, c.chat, c.hypothesis]);
        let total = c.sticky + c.chat + c.hypothesis;
        if a.total_mentions != total {
            return Err(format!(
                "{}: total {} != channel sum {total}",
                a.entity_id, a.total_mentions
            ));
        }
        let shade = f64::from(total.min(cap)) / f64::from(cap);
        if a.shade != shade {
            return Err(format!(
                "{}: shade {} expected {shade}",
                a.entity_id, a.shade
            ));
        }
    }
    if seen != counts {
        return Err(format!("counts {seen:?}, oracle {counts:?}"));
    }
    let ordered: Vec<usize> = model
        .order
        .iter()
        .copied()
        .filter(|i| counts.contains_key(i))
        .collect();
    let live: Vec<usize> = viz
        .named_avatars
        .iter()
        .map(|a| index(&a.entity_id))
        .collect();
    if live[..ordered.len().min(live.len())] != ordered[..] {
        return Err(format!(
            "avatar order {live:?}, oracle first-mention order {ordered:?}"
        ));
    }
    let highlight: Vec<usize> = viz
        .named_avatars
        .iter()
        .filter(|a| a.last_hypothesis_highlight)
        .map(|a| index(&a.entity_id))
        .collect();
    let expected: Vec<usize> = model
        .highlight
        .filter(|i| counts.contains_key(i))
        .into_iter()
        .collect();
    if highlight != expected {
        return Err(format!("highlight {highlight:?}, oracle {expected:?}"));
    }
    let placeholders = if viz.named_avatars.is_empty() { 4 } else { 2 };
    if viz.placeholder_count != placeholders {
        return Err(format!(
            "placeholders {} expected {placeholders}",
            viz.placeholder_count
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// TF/IDF oracle over a dense count matrix.

/// Dense `count * ln(N / df)` weights, rows are documents.
pub fn dense_tfidf(counts: &[Vec<u32>]) -> Vec<Vec<f64>> {
    let n = counts.len();
    let m = counts.first().map_or(0, Vec::len);
    let df: Vec<usize> = (0..m)
        .map(|j| counts.iter().filter(|row| row[j] > 0).count())
        .collect();
    counts
        .iter()
        .map(|row| {
            (0..m)
                .map(|j| {
                    if row[j] == 0 {
                        0.0
                    } else {
                        f64::from(row[j]) * (n as f64 / df[j] as f64).ln()
                    }
                })
                .collect()
        })
        .collect()
}

pub fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Per-document counts of each gazetteer entity using the mention oracle.
pub fn oracle_count_matrix(corpus: &Corpus) -> Vec<Vec<u32>> {
    let entities = entities_from_gazetteer(corpus.gazetteer());
    corpus
        .documents()
        .iter()
        .map(|d| {
            let mut row = vec![0; entities.len()];
            for m in oracle_extract(&d.body, &entities, false, true) {
                if let OTarget::Entity(i) = m.target {
                    row[i] += 1;
                }
            }
            row
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Random text, corpora and operations.

const FILLER: &[&str] = &[
    "the",
    "van",
    "was",
    "seen",
    "near",
    "dock",
    "night",
    "shift",
    "said",
    "route",
    "14",
    "riverside",
    "plate",
    "klm",
    "220",
    "green",
    "anchor",
    "tattoo",
    "cannery",
    "9pm",
    "left",
    "early",
    "and",
    "body",
    "bar",
    "o",
    "x1",
];
const CAPS: &[&str] = &[
    "Harbor", "Street", "Quinn", "Blake", "Morgan", "Ellis", "Nora", "Reyes", "Anchor", "Bar",
    "Police", "Chief", "Éloise", "Östen", "K9", "Q",
];
const STOP_CAPS: &[&str] = &[
    "The",
    "He",
    "She",
    "Monday",
    "March",
    "Detective",
    "Mr",
    "And",
    "On",
    "THE",
];
const SEPS: &[&str] = &[
    " ", " ", " ", " ", " ", " ", "  ", "\t", ", ", ". ", ".\n", "\n", "; ", ": ", "! ", "? ",
    " - ", "'s ", "-",
];

/// Person-name fragments drawn from a gazetteer: full names in several
/// casings and spacings, single words and aliases.
pub fn name_vocabulary(gazetteer: &[PersonEntry]) -> Vec<String> {
    let mut out = Vec::new();
    for p in gazetteer {
        for name in std::iter::once(&p.canonical_name).chain(&p.aliases) {
            out.push(name.clone());
            out.push(name.to_lowercase());
            out.push(name.to_uppercase());
            out.push(name.replace(' ', "  "));
            out.push(name.replace(' ', "\t"));
            out.push(name.replace(' ', "\n"));
            out.extend(name.split_whitespace().map(str::to_string));
        }
    }
    out
}

pub fn random_text(rng: &mut impl Rng, names: &[String], max_words: usize) -> String {
    let n = rng.gen_range(1..=max_words.max(1));
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push_str(SEPS.choose(rng).unwrap());
        }
        let roll = rng.gen_range(0..100);
        let word = if roll < 35 && !names.is_empty() {
            names.choose(rng).unwrap().clone()
        } else if roll < 55 {
            CAPS.choose(rng).unwrap().to_string()
        } else if roll < 62 {
            STOP_CAPS.choose(rng).unwrap().to_string()
        } else {
            FILLER.choose(rng).unwrap().to_string()
        };
        out.push_str(&word);
    }
    if rng.gen_bool(0.3) {
        out.push('.');
    }
    out
}

const FIRST: &[&str] = &[
    "Ann", "Bo", "Cy", "Dee", "Eli", "Fay", "Gus", "Ivy", "Jo", "Kit", "Lee",
];
const LAST: &[&str] = &[
    "Park",
    "Stone",
    "Marsh",
    "Lee",
    "Hart",
    "Vance",
    "O'Neil",
    "Smith-Jones",
    "Cole",
    "Ray",
];

/// A gazetteer with deliberately overlapping names: shared first and last
/// words, prefixes of longer names, punctuated names and duplicate aliases.
pub fn random_gazetteer(rng: &mut impl Rng, size: usize) -> Vec<PersonEntry> {
    let mut out: Vec<PersonEntry> = Vec::new();
    let mut used = std::collections::BTreeSet::new();
    while out.len() < size {
        let mut name = format!(
            "{} {}",
            FIRST.choose(rng).unwrap(),
            LAST.choose(rng).unwrap()
        );
        if rng.gen_bool(0.15) {
            name = format!("{name} {}", LAST.choose(rng).unwrap());
        }
        if !used.insert(key_of(&name)) {
            continue;
        }
        let mut aliases = Vec::new();
        if rng.gen_bool(0.3) {
            aliases.push(LAST.choose(rng).unwrap().to_string());
        }
        if rng.gen_bool(0.15) && !out.is_empty() {
            // collide with someone else's canonical name
            aliases.push(out.choose(rng).unwrap().canonical_name.clone());
        }
        out.push(PersonEntry {
            entity_id: format!("p{}", out.len()),
            canonical_name: name,
            aliases,
        });
    }
    out
}

/// A valid corpus of `docs` random documents over a random gazetteer.
pub fn random_corpus(rng: &mut impl Rng, docs: usize, people: usize) -> Corpus {
    let gazetteer = random_gazetteer(rng, people);
    let names = name_vocabulary(&gazetteer);
    let roles = [
        AssignedRole::AnalystA,
        AssignedRole::AnalystB,
        AssignedRole::Both,
    ];
    let documents: Vec<DocumentDescriptor> = (0..docs)
        .map(|i| DocumentDescriptor {
            doc_id: format!("d{i}"),
            case_id: "c1".into(),
            title: format!("Document {i}"),
            file: format!("docs/d{i}.txt"),
            assigned_role: *roles.choose(rng).unwrap(),
        })
        .collect();
    let bodies = (0..docs).map(|_| random_text(rng, &names, 40)).collect();
    let manifest = CorpusManifest {
        version: 1,
        corpus_id: "random".into(),
        cases: vec![CaseDescriptor {
            case_id: "c1".into(),
            title: "Case".into(),
            is_cold: false,
        }],
        documents,
        solution: gazetteer[0].entity_id.clone(),
        gazetteer,
        clues: vec![ClueDescriptor {
            clue_id: "k1".into(),
            description: "green van".into(),
            keyword_sets: vec![vec!["green van".into()]],
        }],
    };
    Corpus::from_parts(manifest, bodies).expect("random corpus is valid")
}

fn pick_id(rng: &mut impl Rng, ids: &[u64]) -> u64 {
    if ids.is_empty() || rng.gen_bool(0.08) {
        rng.gen_range(0..1000)
    } else {
        *ids.choose(rng).unwrap()
    }
}

fn maybe_bad_text(rng: &mut impl Rng, names: &[String]) -> String {
    match rng.gen_range(0..100) {
        0..=2 => String::new(),
        3..=4 => " \n ".into(),
        _ => random_text(rng, names, 12),
    }
}

fn maybe_bad_coord(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..100) {
        0 => f64::NAN,
        1 => f64::INFINITY,
        _ => rng.gen_range(-50.0..1500.0),
    }
}

/// A random operation kind, mostly valid against `state` but with a steady
/// share of invalid references, empty text and non-finite numbers.
pub fn random_op(
    rng: &mut impl Rng,
    state: &WorkspaceState,
    corpus: &Corpus,
    names: &[String],
) -> (Role, OpKind) {
    let actor = *Role::ALL.choose(rng).unwrap();
    let stickies: Vec<u64> = state.stickies.keys().copied().collect();
    let hypotheses: Vec<u64> = state.hypotheses.keys().copied().collect();
    let kind = match rng.gen_range(0..100) {
        0..=17 => OpKind::CreateSticky {
            text: maybe_bad_text(rng, names),
            x: maybe_bad_coord(rng),
            y: maybe_bad_coord(rng),
        },
        18..=25 => OpKind::EditSticky {
            sticky_id: pick_id(rng, &stickies),
            text: maybe_bad_text(rng, names),
        },
        26..=29 => OpKind::MoveSticky {
            sticky_id: pick_id(rng, &stickies),
            x: maybe_bad_coord(rng),
            y: maybe_bad_coord(rng),
        },
        30..=32 => OpKind::LinkStickies {
            from_sticky: pick_id(rng, &stickies),
            to_sticky: pick_id(rng, &stickies),
        },
        33..=34 => {
            let k = rng.gen_range(0..=stickies.len().min(3));
            OpKind::PileStickies {
                sticky_ids: (0..k).map(|_| pick_id(rng, &stickies)).collect(),
                pile_id: format!("pile-{}", rng.gen_range(0..3)),
            }
        }
        35..=38 => OpKind::DeleteSticky {
            sticky_id: pick_id(rng, &stickies),
        },
        39..=54 => OpKind::PostChat {
            text: maybe_bad_text(rng, names),
        },
        55..=62 => {
            let doc = corpus.documents().choose(rng).unwrap();
            let len = doc.body.chars().count();
            let start = rng.gen_range(0..len + 2);
            let end = start + rng.gen_range(0..40);
            OpKind::CreateAnnotation {
                doc_id: if rng.gen_bool(0.03) {
                    "nope".into()
                } else {
                    doc.doc_id.clone()
                },
                start,
                end,
                note: if rng.gen_bool(0.5) {
                    String::new()
                } else {
                    random_text(rng, names, 8)
                },
            }
        }
        63..=70 => OpKind::CreateHypothesis {
            text: maybe_bad_text(rng, names),
        },
        71..=74 => OpKind::EditHypothesisText {
            hypothesis_id: pick_id(rng, &hypotheses),
            text: maybe_bad_text(rng, names),
        },
        75..=80 => OpKind::AddConfirming {
            hypothesis_id: pick_id(rng, &hypotheses),
            text: maybe_bad_text(rng, names),
        },
        81..=85 => OpKind::AddDisconfirming {
            hypothesis_id: pick_id(rng, &hypotheses),
            text: maybe_bad_text(rng, names),
        },
        86..=88 => OpKind::SetHypothesisStatus {
            hypothesis_id: pick_id(rng, &hypotheses),
            status: *[
                HypothesisStatus::Open,
                HypothesisStatus::Accepted,
                HypothesisStatus::Rejected,
                HypothesisStatus::NeedsMoreInfo,
            ]
            .choose(rng)
            .unwrap(),
        },
        89..=92 => OpKind::SetStatusComment {
            hypothesis_id: pick_id(rng, &hypotheses),
            comment: if rng.gen_bool(0.2) {
                String::new()
            } else {
                random_text(rng, names, 10)
            },
        },
        93..=96 => OpKind::AddMapMarker {
            label: maybe_bad_text(rng, names),
            x: maybe_bad_coord(rng),
            y: maybe_bad_coord(rng),
            doc_id: random_doc_ref(rng, corpus),
        },
        _ => OpKind::AddTimelineEvent {
            label: maybe_bad_text(rng, names),
            timestamp: maybe_bad_coord(rng),
            doc_id: random_doc_ref(rng, corpus),
        },
    };
    (actor, kind)
}

fn random_doc_ref(rng: &mut impl Rng, corpus: &Corpus) -> Option<String> {
    match rng.gen_range(0..10) {
        0..=4 => None,
        5 => Some("missing-doc".into()),
        _ => Some(corpus.documents().choose(rng).unwrap().doc_id.clone()),
    }
}

/// One example of every operation kind, valid against a state that already
/// holds sticky 1, sticky 2 and hypothesis 3.
pub fn one_of_each_kind() -> Vec<OpKind> {
    vec![
        OpKind::CreateSticky {
            text: "note".into(),
            x: 1.0,
            y: 2.0,
        },
        OpKind::EditSticky {
            sticky_id: 1,
            text: "edited".into(),
        },
        OpKind::MoveSticky {
            sticky_id: 1,
            x: 5.0,
            y: 6.0,
        },
        OpKind::LinkStickies {
            from_sticky: 1,
            to_sticky: 2,
        },
        OpKind::PileStickies {
            sticky_ids: vec![1, 2],
            pile_id: "p".into(),
        },
        OpKind::DeleteSticky { sticky_id: 2 },
        OpKind::PostChat {
            text: "hello".into(),
        },
        OpKind::CreateAnnotation {
            doc_id: "d1".into(),
            start: 0,
            end: 8,
            note: String::new(),
        },
        OpKind::CreateHypothesis {
            text: "Gramming did it".into(),
        },
        OpKind::EditHypothesisText {
            hypothesis_id: 3,
            text: "Rathbone did it".into(),
        },
        OpKind::AddConfirming {
            hypothesis_id: 3,
            text: "the van".into(),
        },
        OpKind::AddDisconfirming {
            hypothesis_id: 3,
            text: "the receipt".into(),
        },
        OpKind::SetHypothesisStatus {
            hypothesis_id: 3,
            status: HypothesisStatus::Accepted,
        },
        OpKind::SetStatusComment {
            hypothesis_id: 3,
            comment: "agreed".into(),
        },
        OpKind::AddMapMarker {
            label: "dock".into(),
            x: 1.0,
            y: 1.0,
            doc_id: Some("d1".into()),
        },
        OpKind::AddTimelineEvent {
            label: "9pm".into(),
            timestamp: 21.0,
            doc_id: None,
        },
    ]
}

// ---------------------------------------------------------------------------
// Golden files.

/// Compares `actual` with `fixtures/golden/<name>`; with `UPDATE_GOLDEN=1`
/// the file is rewritten instead.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = fixtures_dir().join("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1") {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected =
        std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        return Ok(());
    }
    let line = expected
        .lines()
        .zip(actual.lines())
        .position(|(a, b)| a != b)
        .unwrap_or_else(|| expected.lines().count().min(actual.lines().count()));
    Err(format!("{name} differs from golden at line {}", line + 1))
}

pub fn start_state_text() -> String {
    let core = translucent_core::SessionCore::new(
        translucent_core::SessionHeader::new(
            "golden",
            "mini-harbor",
            translucent_core::Condition::Translucence,
        ),
        std::sync::Arc::new(mini_corpus()),
        Box::new(translucent_core::sync::NullSink),
    )
    .unwrap();
    let mut out = serde_json::to_string_pretty(&core.snapshot()).unwrap();
    out.push('\n');
    out
}

pub fn trajectory_text(log_name: &str) -> (String, String) {
    let log =
        translucent_core::SessionLog::read(fixtures_dir().join("logs").join(log_name)).unwrap();
    let analysis = translucent_core::metrics::analyze(
        &log,
        &mini_corpus(),
        translucent_core::metrics::AnalyzeOptions {
            trajectory: true,
            sample_every: 1,
        },
    )
    .unwrap();
    let mut steps = String::new();
    for step in &analysis.trajectory {
        steps.push_str(&serde_json::to_string(step).unwrap());
        steps.push('\n');
    }
    (steps, analysis.report.to_json())
}
