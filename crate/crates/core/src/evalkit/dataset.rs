use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{ClaimLabel, LanguageTag, VerdictLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    ClaimDetection,
    Veracity,
}

impl Task {
    pub fn labels(self) -> [GoldLabel; 2] {
        match self {
            Task::ClaimDetection => [GoldLabel::CheckWorthy, GoldLabel::NotCheckWorthy],
            Task::Veracity => [GoldLabel::True, GoldLabel::False],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::ClaimDetection => "claim-detection",
            Task::Veracity => "veracity",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "claim-detection" => Ok(Task::ClaimDetection),
            "veracity" => Ok(Task::Veracity),
            other => Err(format!("unknown task {other:?}; expected claim-detection or veracity")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldLabel {
    CheckWorthy,
    NotCheckWorthy,
    True,
    False,
}

impl GoldLabel {
    pub fn task(self) -> Task {
        match self {
            GoldLabel::CheckWorthy | GoldLabel::NotCheckWorthy => Task::ClaimDetection,
            GoldLabel::True | GoldLabel::False => Task::Veracity,
        }
    }

    /// The other label of the same binary task.
    pub fn complement(self) -> Self {
        match self {
            GoldLabel::CheckWorthy => GoldLabel::NotCheckWorthy,
            GoldLabel::NotCheckWorthy => GoldLabel::CheckWorthy,
            GoldLabel::True => GoldLabel::False,
            GoldLabel::False => GoldLabel::True,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GoldLabel::CheckWorthy => "check_worthy",
            GoldLabel::NotCheckWorthy => "not_check_worthy",
            GoldLabel::True => "true",
            GoldLabel::False => "false",
        }
    }

    fn parse(raw: &serde_json::Value) -> Option<Self> {
        match raw {
            serde_json::Value::Bool(true) => Some(GoldLabel::True),
            serde_json::Value::Bool(false) => Some(GoldLabel::False),
            serde_json::Value::String(s) => match s.to_lowercase().replace('-', "_").as_str() {
                "check_worthy" | "checkworthy" => Some(GoldLabel::CheckWorthy),
                "not_check_worthy" | "notcheckworthy" => Some(GoldLabel::NotCheckWorthy),
                "true" => Some(GoldLabel::True),
                "false" => Some(GoldLabel::False),
                _ => None,
            },
            _ => None,
        }
    }
}

impl From<ClaimLabel> for GoldLabel {
    fn from(l: ClaimLabel) -> Self {
        match l {
            ClaimLabel::CheckWorthy => GoldLabel::CheckWorthy,
            ClaimLabel::NotCheckWorthy => GoldLabel::NotCheckWorthy,
        }
    }
}

impl GoldLabel {
    /// `None` for [`VerdictLabel::Uncertain`].
    pub fn from_verdict(l: VerdictLabel) -> Option<Self> {
        match l {
            VerdictLabel::Supported => Some(GoldLabel::True),
            VerdictLabel::Refuted => Some(GoldLabel::False),
            VerdictLabel::Uncertain => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub text: String,
    pub language: LanguageTag,
    pub task: Task,
    pub gold: GoldLabel,
    pub split: Split,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("reading dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?} for language {language} in split {split:?}")]
    DuplicateId { line: usize, id: String, language: String, split: Split },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: serde_json::Value,
    text: String,
    language: String,
    label: serde_json::Value,
    split: String,
}

/// Parse JSON-lines records for `task`. Blank lines are skipped.
pub fn parse_dataset(text: &str, task: Task) -> Result<Vec<EvalRecord>, DatasetError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| DatasetError::Schema { line: line_no, message };
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| schema(e.to_string()))?;
        let id = match raw.id {
            serde_json::Value::String(s) if !s.is_empty() => s,
            serde_json::Value::Number(n) => n.to_string(),
            _ => return Err(schema("id must be a non-empty string or a number".into())),
        };
        if raw.text.trim().is_empty() {
            return Err(schema("text is empty".into()));
        }
        let language = LanguageTag::parse(&raw.language).map_err(|e| schema(e.to_string()))?;
        let split = raw.split.parse().map_err(schema)?;
        let gold = GoldLabel::parse(&raw.label)
            .filter(|g| g.task() == task)
            .ok_or_else(|| schema(format!("label {} is not valid for task {task}", raw.label)))?;
        if !seen.insert((id.clone(), language.clone(), split)) {
            return Err(DatasetError::DuplicateId { line: line_no, id, language: language.to_string(), split });
        }
        out.push(EvalRecord { id, text: raw.text, language, task, gold, split });
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>, task: Task) -> Result<Vec<EvalRecord>, DatasetError> {
    parse_dataset(&std::fs::read_to_string(path)?, task)
}

/// Record counts per (split, label).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSummary {
    counts: BTreeMap<(Split, GoldLabel), usize>,
}

impl DatasetSummary {
    pub fn of(records: &[EvalRecord]) -> Self {
        let mut counts = BTreeMap::new();
        for r in records {
            *counts.entry((r.split, r.gold)).or_insert(0) += 1;
        }
        Self { counts }
    }

    pub fn count(&self, split: Split, label: GoldLabel) -> usize {
        self.counts.get(&(split, label)).copied().unwrap_or(0)
    }

    pub fn split_total(&self, split: Split) -> usize {
        self.counts.iter().filter(|((s, _), _)| *s == split).map(|(_, n)| n).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Split, GoldLabel, usize)> + '_ {
        self.counts.iter().map(|(&(s, l), &n)| (s, l, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_counts() {
        let text = r#"{"id":"a","text":"x","language":"en","label":"check_worthy","split":"test"}

{"id":2,"text":"y","language":"nb","label":"not_check_worthy","split":"dev"}
"#;
        let records = parse_dataset(text, Task::ClaimDetection).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[1].id, "2");
        let s = DatasetSummary::of(&records);
        assert_eq!(s.count(Split::Test, GoldLabel::CheckWorthy), 1);
        assert_eq!(s.split_total(Split::Dev), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"id\":\"a\",\"text\":\"x\",\"language\":\"en\",\"label\":\"true\",\"split\":\"test\"}\n{oops\n";
        match parse_dataset(text, Task::Veracity) {
            Err(DatasetError::Schema { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn label_must_match_task() {
        let text = "{\"id\":\"a\",\"text\":\"x\",\"language\":\"en\",\"label\":true,\"split\":\"test\"}";
        assert!(parse_dataset(text, Task::Veracity).is_ok());
        assert!(matches!(parse_dataset(text, Task::ClaimDetection), Err(DatasetError::Schema { line: 1, .. })));
    }

    #[test]
    fn duplicate_id_within_language_and_split() {
        let row = |lang: &str, split: &str| {
            format!("{{\"id\":\"a\",\"text\":\"x\",\"language\":\"{lang}\",\"label\":\"false\",\"split\":\"{split}\"}}")
        };
        let ok = [row("en", "test"), row("de", "test"), row("en", "dev")].join("\n");
        assert!(parse_dataset(&ok, Task::Veracity).is_ok());
        let dup = [row("en", "test"), row("EN", "test")].join("\n");
        assert!(matches!(parse_dataset(&dup, Task::Veracity), Err(DatasetError::DuplicateId { line: 2, .. })));
    }

    #[test]
    fn bad_split_and_language() {
        let bad_split = "{\"id\":\"a\",\"text\":\"x\",\"language\":\"en\",\"label\":\"true\",\"split\":\"holdout\"}";
        assert!(parse_dataset(bad_split, Task::Veracity).is_err());
        let bad_lang = "{\"id\":\"a\",\"text\":\"x\",\"language\":\"e\",\"label\":\"true\",\"split\":\"test\"}";
        assert!(parse_dataset(bad_lang, Task::Veracity).is_err());
    }
}
