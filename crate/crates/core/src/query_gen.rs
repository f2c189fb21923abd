//! Claim decomposition into search questions.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::llm::{LlmClient, LlmProvider, LlmRequest, LlmTask};
use crate::model::Claim;
use crate::provider::ProviderError;
use crate::templates::{TemplateRegistry, QUESTION_DECOMPOSITION};

/// Generated questions followed by the verbatim claim as the final query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionSet {
    pub claim_text: String,
    pub questions: Vec<String>,
}

impl QuestionSet {
    /// The fallback set: the claim itself as the only query.
    pub fn verbatim(claim_text: &str) -> Self {
        Self { claim_text: claim_text.to_string(), questions: vec![claim_text.to_string()] }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum QueryGenError {
    #[error("claim is not check-worthy")]
    NotCheckWorthy,
    #[error("provider returned no parseable questions")]
    EmptyGeneration,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Template(#[from] crate::templates::TemplateError),
}

fn casefold(s: &str) -> String {
    s.trim().to_lowercase()
}

pub(crate) fn strip_code_fence(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let rest = rest.split_once('\n').map(|(_, body)| body).unwrap_or("");
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

fn strip_list_marker(line: &str) -> &str {
    let t = line.trim();
    for bullet in ["- ", "* ", "• "] {
        if let Some(rest) = t.strip_prefix(bullet) {
            return rest.trim();
        }
    }
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            if r.is_empty() || r.starts_with(char::is_whitespace) {
                return r.trim();
            }
        }
    }
    t
}

/// Parse model output as a JSON array of strings, or failing that as one
/// question per line with list markers removed.
pub fn parse_questions(raw: &str) -> Vec<String> {
    let body = strip_code_fence(raw);
    if body.starts_with('[') {
        if let Ok(items) = serde_json::from_str::<Vec<String>>(body) {
            return items.into_iter().map(|q| q.trim().to_string()).filter(|q| !q.is_empty()).collect();
        }
    }
    body.lines()
        .map(strip_list_marker)
        .map(|l| l.trim_matches('"').trim())
        .filter(|l| !l.is_empty() && *l != "[" && *l != "]")
        .map(str::to_string)
        .collect()
}

/// Trim, drop casefold duplicates and copies of the claim, cap at
/// `max_questions`, then append the claim verbatim.
pub fn assemble(claim_text: &str, generated: Vec<String>, max_questions: usize) -> QuestionSet {
    let mut seen: HashSet<String> = HashSet::from([casefold(claim_text)]);
    let mut questions: Vec<String> = generated
        .into_iter()
        .map(|q| q.trim().to_string())
        .filter(|q| !q.is_empty() && seen.insert(casefold(q)))
        .take(max_questions)
        .collect();
    questions.push(claim_text.to_string());
    QuestionSet { claim_text: claim_text.to_string(), questions }
}

/// Ask the LLM for questions about a check-worthy claim.
pub async fn decompose(
    claim: &Claim,
    llm: &dyn LlmClient,
    provider: &LlmProvider,
    templates: &TemplateRegistry,
) -> Result<QuestionSet, QueryGenError> {
    if !claim.is_check_worthy() {
        return Err(QueryGenError::NotCheckWorthy);
    }
    let vars: BTreeMap<&'static str, String> = [
        ("claim", claim.text().to_string()),
        ("language", claim.language().to_string()),
        ("max_questions", provider.max_questions.to_string()),
    ]
    .into_iter()
    .collect();
    let prompt = templates.get(QUESTION_DECOMPOSITION)?.render(&vars)?;
    let mut req = LlmRequest::new(LlmTask::QuestionGeneration, prompt);
    req.vars = vars;
    req.temperature = provider.temperature;
    req.seed = provider.seed;
    let raw = llm.generate(&req).await?;
    let generated = parse_questions(&raw);
    if generated.is_empty() {
        return Err(QueryGenError::EmptyGeneration);
    }
    Ok(assemble(claim.text(), generated, provider.max_questions))
}

/// [`decompose`], falling back to the verbatim-only set on empty generation.
pub async fn decompose_or_fallback(
    claim: &Claim,
    llm: &dyn LlmClient,
    provider: &LlmProvider,
    templates: &TemplateRegistry,
) -> Result<QuestionSet, QueryGenError> {
    match decompose(claim, llm, provider, templates).await {
        Err(QueryGenError::EmptyGeneration) => Ok(QuestionSet::verbatim(claim.text())),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::StubLlm;
    use crate::model::{LanguageTag, Sentence};
    use async_trait::async_trait;

    fn claim(text: &str) -> Claim {
        Claim::new(Sentence::standalone(text, LanguageTag::parse("en").unwrap()), 0.9, 0.5)
    }

    struct Canned(&'static str);

    #[async_trait]
    impl LlmClient for Canned {
        async fn generate(&self, _: &LlmRequest) -> Result<String, ProviderError> {
            Ok(self.0.to_string())
        }
        fn fingerprint(&self) -> String {
            "canned".into()
        }
    }

    #[tokio::test]
    async fn echo_stub_example() {
        let qs = decompose(&claim("X won the 2020 election"), &StubLlm, &LlmProvider::stub(), &Default::default())
            .await
            .unwrap();
        assert_eq!(qs.questions, ["Who won the 2020 election?", "X won the 2020 election"]);
    }

    #[tokio::test]
    async fn casefold_dedup() {
        let c = claim("Claim text.");
        let qs = decompose(&c, &Canned(r#"["Q1","q1 ","Q2"]"#), &LlmProvider::stub(), &Default::default())
            .await
            .unwrap();
        assert_eq!(qs.questions, ["Q1", "Q2", "Claim text."]);
    }

    #[tokio::test]
    async fn empty_generation_falls_back() {
        let c = claim("Claim text.");
        let err = decompose(&c, &Canned("[]"), &LlmProvider::stub(), &Default::default()).await;
        assert!(matches!(err, Err(QueryGenError::EmptyGeneration)));
        let qs = decompose_or_fallback(&c, &Canned("  "), &LlmProvider::stub(), &Default::default())
            .await
            .unwrap();
        assert_eq!(qs, QuestionSet::verbatim("Claim text."));
    }

    #[tokio::test]
    async fn rejects_non_check_worthy() {
        let c = Claim::new(Sentence::standalone("meh", LanguageTag::parse("en").unwrap()), 0.1, 0.5);
        let err = decompose(&c, &StubLlm, &LlmProvider::stub(), &Default::default()).await;
        assert!(matches!(err, Err(QueryGenError::NotCheckWorthy)));
    }

    #[test]
    fn line_parsing_strips_markers() {
        let raw = "1. When was it built?\n2) Who built it?\n- Where is it?\n\n* Why?\n2020 was a year";
        assert_eq!(
            parse_questions(raw),
            ["When was it built?", "Who built it?", "Where is it?", "Why?", "2020 was a year"]
        );
        assert_eq!(parse_questions("```json\n[\"A?\", \" \"]\n```"), ["A?"]);
    }

    #[test]
    fn claim_never_duplicated_and_capped() {
        let qs = assemble(
            "The claim",
            vec!["the claim ".into(), "a".into(), "b".into(), "c".into(), "d".into()],
            3,
        );
        assert_eq!(qs.questions, ["a", "b", "c", "The claim"]);
    }

    proptest::proptest! {
        #[test]
        fn assembled_set_invariants(
            gen in proptest::collection::vec("[ a-cA-C]{0,4}", 0..10),
            max in 1usize..5,
        ) {
            let claim = "A b";
            let qs = assemble(claim, gen, max);
            proptest::prop_assert!(qs.questions.len() <= max + 1);
            proptest::prop_assert_eq!(qs.questions.iter().filter(|q| q.as_str() == claim).count(), 1);
            proptest::prop_assert_eq!(qs.questions.last().map(String::as_str), Some(claim));
            let folded: HashSet<String> = qs.questions.iter().map(|q| casefold(q)).collect();
            proptest::prop_assert_eq!(folded.len(), qs.questions.len());
            proptest::prop_assert!(qs.questions.iter().all(|q| !q.trim().is_empty()));
        }
    }
}
