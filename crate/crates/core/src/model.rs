//! Domain types shared by every pipeline stage.
//!
//! All types are immutable value objects with a snake_case JSON wire form.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("malformed language tag {0:?}")]
    MalformedTag(String),
}

/// A BCP-47 style language tag, stored in canonical lowercase form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageTag(String);

impl LanguageTag {
    /// Parse and canonicalize a raw tag. Subtags are separated by `-` or `_`,
    /// must be 2-8 ASCII alphanumerics each, and the primary subtag must be
    /// alphabetic.
    pub fn parse(raw: &str) -> Result<Self, TagError> {
        let malformed = || TagError::MalformedTag(raw.to_string());
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err(malformed());
        }
        let mut parts = Vec::new();
        for (i, sub) in trimmed.split(['-', '_']).enumerate() {
            let len = sub.chars().count();
            if !(2..=8).contains(&len) || !sub.chars().all(|c| c.is_ascii_alphanumeric()) {
                return Err(malformed());
            }
            if i == 0 && !sub.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(malformed());
            }
            parts.push(sub.to_ascii_lowercase());
        }
        Ok(Self(parts.join("-")))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The primary language subtag ("nb" for "nb-no").
    pub fn primary(&self) -> &str {
        self.0.split('-').next().unwrap_or(&self.0)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for LanguageTag {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl TryFrom<String> for LanguageTag {
    type Error = TagError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::parse(&value)
    }
}

impl From<LanguageTag> for String {
    fn from(tag: LanguageTag) -> Self {
        tag.0
    }
}

/// Half-open character range `[start, end)` measured in Unicode scalar values.
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

    /// Extract the spanned characters from `source`.
    pub fn slice<'a>(&self, source: &'a str) -> &'a str {
        let mut indices = source.char_indices().map(|(b, _)| b).chain(std::iter::once(source.len()));
        let start = indices.nth(self.start).unwrap_or(source.len());
        let end = if self.end > self.start {
            indices.nth(self.end - self.start - 1).unwrap_or(source.len())
        } else {
            start
        };
        &source[start..end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub span: Span,
    pub language: LanguageTag,
}

impl Sentence {
    /// A sentence that is its own source document.
    pub fn standalone(text: impl Into<String>, language: LanguageTag) -> Self {
        let text = text.into();
        let end = text.chars().count();
        Self { text, span: Span::new(0, end), language }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimLabel {
    CheckWorthy,
    NotCheckWorthy,
}

impl ClaimLabel {
    /// Ties go to the positive class.
    pub fn from_score(score: f64, threshold: f64) -> Self {
        if score >= threshold {
            ClaimLabel::CheckWorthy
        } else {
            ClaimLabel::NotCheckWorthy
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub sentence: Sentence,
    pub label: ClaimLabel,
    pub score: f64,
}

impl Claim {
    pub fn new(sentence: Sentence, score: f64, threshold: f64) -> Self {
        Self { label: ClaimLabel::from_score(score, threshold), sentence, score }
    }

    pub fn text(&self) -> &str {
        &self.sentence.text
    }

    pub fn language(&self) -> &LanguageTag {
        &self.sentence.language
    }

    pub fn is_check_worthy(&self) -> bool {
        self.label == ClaimLabel::CheckWorthy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StanceLabel {
    Supports,
    Refutes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub url: String,
    pub normalized_url: String,
    pub title: String,
    pub snippet: String,
    pub source_engine: String,
    #[serde(default)]
    pub similarity: Option<f64>,
    #[serde(default)]
    pub stance: Option<StanceLabel>,
}

impl EvidenceItem {
    /// Build an item from a raw search hit; fails if the URL cannot be normalized.
    pub fn from_hit(
        url: impl Into<String>,
        title: impl Into<String>,
        snippet: impl Into<String>,
        source_engine: impl Into<String>,
    ) -> Result<Self, crate::evidence::UrlError> {
        let url = url.into();
        let normalized_url = crate::evidence::normalize_url(&url)?;
        Ok(Self {
            url,
            normalized_url,
            title: title.into(),
            snippet: snippet.into(),
            source_engine: source_engine.into(),
            similarity: None,
            stance: None,
        })
    }

    /// Host part of the normalized URL.
    pub fn host(&self) -> &str {
        crate::evidence::host_of_normalized(&self.normalized_url)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictLabel {
    Supported,
    Refuted,
    Uncertain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: Claim,
    pub label: VerdictLabel,
    pub support_votes: u32,
    pub refute_votes: u32,
    pub evidence: Vec<EvidenceItem>,
    #[serde(default)]
    pub justification: Option<String>,
    #[serde(default)]
    pub correction: Option<String>,
    /// Set when an upstream stage failed for this claim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Verdict {
    /// The degraded verdict produced when a stage fails for one claim.
    pub fn failed(claim: Claim, error: impl Into<String>) -> Self {
        Self {
            claim,
            label: VerdictLabel::Uncertain,
            support_votes: 0,
            refute_votes: 0,
            evidence: Vec::new(),
            justification: None,
            correction: None,
            error: Some(error.into()),
        }
    }

    /// Check the vote-count and correction invariants.
    pub fn is_consistent(&self) -> bool {
        let with_stance = self.evidence.iter().filter(|e| e.stance.is_some()).count();
        let votes_ok = (self.support_votes + self.refute_votes) as usize == with_stance;
        let correction_ok = self.correction.is_none() || self.label == VerdictLabel::Refuted;
        votes_ok && correction_ok
    }
}
