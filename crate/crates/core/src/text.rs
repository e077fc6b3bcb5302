//! Word tokenization shared by the entity matcher and clue detection.
//!
//! A word is a maximal run of alphanumeric characters. Offsets are kept both
//! in characters (the unit of every public span) and bytes (for slicing).

use serde::{Deserialize, Serialize};

/// Half-open character range `[start, end)` into a text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub lower: String,
    pub span: Span,
    pub byte_start: usize,
    pub byte_end: usize,
}

impl Token<'_> {
    pub fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }
}

pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut current: Option<(usize, usize)> = None; // (byte_start, char_start)
    let mut char_idx = 0;
    for (byte_idx, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if current.is_none() {
                current = Some((byte_idx, char_idx));
            }
        } else if let Some((bs, cs)) = current.take() {
            tokens.push(make_token(text, bs, byte_idx, cs, char_idx));
        }
        char_idx += 1;
    }
    if let Some((bs, cs)) = current {
        tokens.push(make_token(text, bs, text.len(), cs, char_idx));
    }
    tokens
}

fn make_token(text: &str, bs: usize, be: usize, cs: usize, ce: usize) -> Token<'_> {
    let word = &text[bs..be];
    Token {
        text: word,
        lower: word.to_lowercase(),
        span: Span::new(cs, ce),
        byte_start: bs,
        byte_end: be,
    }
}

/// Lowercased word sequence of `text`.
pub fn words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.lower).collect()
}

/// Character count, the unit of all spans.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Substring by character span. Returns `None` if the span is out of range.
pub fn slice_chars(text: &str, span: Span) -> Option<&str> {
    if span.start > span.end {
        return None;
    }
    let mut indices = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()));
    let start = indices.nth(span.start)?;
    let end = if span.end == span.start {
        start
    } else {
        indices.nth(span.end - span.start - 1)?
    };
    Some(&text[start..end])
}

/// True when the words of `needle` appear contiguously in `haystack`.
pub fn contains_phrase(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}
