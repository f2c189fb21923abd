//! Deterministic rule-based sentence segmentation.
//!
//! A boundary is placed after a run of terminal punctuation when it is
//! followed by whitespace and then a letter that is uppercase or belongs to a
//! script without case. Abbreviations and decimal numbers never split.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use crate::model::{LanguageTag, Sentence, Span};

const TERMINALS: &[char] = &['.', '!', '?', '…', '។', '。', '؟', '।'];
/// Characters that may trail a terminal and still belong to the sentence.
const CLOSERS: &[char] = &['"', '\'', ')', ']', '»', '”', '’', '」', '』'];

const DEFAULT_EN_ABBREVIATIONS: &[&str] = &[
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "Sr.", "Jr.", "St.", "Mt.", "Gen.", "Gov.", "Sen.",
    "Rep.", "Rev.", "Capt.", "Col.", "Lt.", "Sgt.", "Inc.", "Ltd.", "Co.", "Corp.", "vs.", "etc.",
    "e.g.", "i.e.", "approx.", "No.", "Fig.", "U.S.", "U.K.", "U.N.", "Jan.", "Feb.", "Mar.",
    "Apr.", "Jun.", "Jul.", "Aug.", "Sep.", "Sept.", "Oct.", "Nov.", "Dec.",
];

#[derive(Debug, thiserror::Error)]
pub enum SegmenterError {
    #[error("abbreviation {0:?} must end with '.'")]
    InvalidAbbreviation(String),
    #[error("min_sentence_chars must be at least 1")]
    InvalidMinChars,
    #[error("reading abbreviation list: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmenterConfig {
    abbreviations: BTreeMap<LanguageTag, BTreeSet<String>>,
    min_sentence_chars: usize,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        let en = LanguageTag::parse("en").expect("static tag");
        let list = DEFAULT_EN_ABBREVIATIONS.iter().map(|s| s.to_string()).collect();
        Self { abbreviations: BTreeMap::from([(en, list)]), min_sentence_chars: 3 }
    }
}

impl SegmenterConfig {
    /// A config with no abbreviation lists at all.
    pub fn empty(min_sentence_chars: usize) -> Result<Self, SegmenterError> {
        if min_sentence_chars == 0 {
            return Err(SegmenterError::InvalidMinChars);
        }
        Ok(Self { abbreviations: BTreeMap::new(), min_sentence_chars })
    }

    pub fn min_sentence_chars(&self) -> usize {
        self.min_sentence_chars
    }

    pub fn with_min_sentence_chars(mut self, n: usize) -> Result<Self, SegmenterError> {
        if n == 0 {
            return Err(SegmenterError::InvalidMinChars);
        }
        self.min_sentence_chars = n;
        Ok(self)
    }

    pub fn add_abbreviation(
        &mut self,
        language: &LanguageTag,
        abbreviation: &str,
    ) -> Result<(), SegmenterError> {
        let abbreviation = abbreviation.trim();
        if !abbreviation.ends_with('.') || abbreviation.len() < 2 {
            return Err(SegmenterError::InvalidAbbreviation(abbreviation.to_string()));
        }
        self.abbreviations
            .entry(language.clone())
            .or_default()
            .insert(abbreviation.to_string());
        Ok(())
    }

    /// Load a UTF-8 abbreviation list, one entry per line. Blank lines are skipped.
    pub fn load_abbreviations(
        &mut self,
        language: &LanguageTag,
        path: impl AsRef<Path>,
    ) -> Result<usize, SegmenterError> {
        let text = std::fs::read_to_string(path)?;
        self.extend_abbreviations(language, &text)
    }

    pub fn extend_abbreviations(
        &mut self,
        language: &LanguageTag,
        list: &str,
    ) -> Result<usize, SegmenterError> {
        let mut n = 0;
        for line in list.lines().map(str::trim).filter(|l| !l.is_empty()) {
            self.add_abbreviation(language, line)?;
            n += 1;
        }
        Ok(n)
    }

    fn abbreviations_for(&self, language: &LanguageTag) -> Option<&BTreeSet<String>> {
        self.abbreviations.get(language).or_else(|| {
            let primary = LanguageTag::parse(language.primary()).ok()?;
            self.abbreviations.get(&primary)
        })
    }
}

fn is_caseless_letter(c: char) -> bool {
    c.is_alphabetic() && !c.is_lowercase() && !c.is_uppercase()
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || is_caseless_letter(c)
}

/// Split `document` into sentences with character spans into it.
pub fn segment(document: &str, language: &LanguageTag, config: &SegmenterConfig) -> Vec<Sentence> {
    let chars: Vec<char> = document.chars().collect();
    let abbreviations = config.abbreviations_for(language);

    // Candidate boundaries: exclusive end index of each sentence.
    let mut ends = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !TERMINALS.contains(&chars[i]) {
            i += 1;
            continue;
        }
        let first_terminal = i;
        while i < chars.len() && TERMINALS.contains(&chars[i]) {
            i += 1;
        }
        while i < chars.len() && CLOSERS.contains(&chars[i]) {
            i += 1;
        }
        let end = i;
        let mut j = end;
        while j < chars.len() && chars[j].is_whitespace() {
            j += 1;
        }
        if j == end || j >= chars.len() || !starts_sentence(chars[j]) {
            continue;
        }
        if chars[first_terminal] == '.' && end == first_terminal + 1 {
            if is_decimal_point(&chars, first_terminal) {
                continue;
            }
            if let Some(list) = abbreviations {
                let token = token_before(&chars, first_terminal);
                if list.contains(&token) {
                    continue;
                }
            }
        }
        ends.push(end);
    }
    ends.push(chars.len());

    let mut spans: Vec<Span> = Vec::new();
    let mut start = 0;
    for end in ends {
        let mut s = start;
        while s < end && chars[s].is_whitespace() {
            s += 1;
        }
        let mut e = end;
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        start = end;
        if s == e {
            continue;
        }
        let span = Span::new(s, e);
        match spans.last_mut() {
            Some(prev) if span.len() < config.min_sentence_chars => prev.end = span.end,
            _ => spans.push(span),
        }
    }

    spans
        .into_iter()
        .map(|span| Sentence {
            text: chars[span.start..span.end].iter().collect(),
            span,
            language: language.clone(),
        })
        .collect()
}

fn is_decimal_point(chars: &[char], dot: usize) -> bool {
    dot > 0
        && chars[dot - 1].is_ascii_digit()
        && chars.get(dot + 1).is_some_and(|c| c.is_ascii_digit())
}

/// The whitespace-delimited token ending at (and including) the dot, with
/// leading opening punctuation removed.
fn token_before(chars: &[char], dot: usize) -> String {
    let mut s = dot;
    while s > 0 && !chars[s - 1].is_whitespace() {
        s -= 1;
    }
    chars[s..=dot]
        .iter()
        .skip_while(|c| matches!(c, '(' | '[' | '"' | '\'' | '«' | '“'))
        .collect()
}
