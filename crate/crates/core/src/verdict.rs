//! Veracity prediction: per-snippet stance, majority vote, and LLM
//! justification and correction.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use futures::future::join_all;
use tokio::sync::Semaphore;
use serde::{Deserialize, Serialize};

use crate::llm::{LlmClient, LlmProvider, LlmRequest, LlmTask};
use crate::model::{Claim, EvidenceItem, LanguageTag, StanceLabel, Verdict, VerdictLabel};
use crate::provider::{fingerprint, JsonEndpoint, ProviderError, DEFAULT_TIMEOUT};
use crate::templates::{PromptTemplate, TemplateRegistry, CORRECTION, JUSTIFICATION};
use crate::text::{content_words, tokens};

/// Maximum length, in characters, of the extractive justification.
pub const FALLBACK_JUSTIFICATION_CHARS: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliKind {
    RemoteModel,
    LlmPrompt,
    KeywordStub,
}

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT.as_millis() as u64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliProvider {
    pub kind: NliKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub prompt_template_id: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl Default for NliProvider {
    fn default() -> Self {
        Self {
            kind: NliKind::KeywordStub,
            endpoint: None,
            prompt_template_id: None,
            api_key_env: None,
            timeout_ms: default_timeout_ms(),
        }
    }
}

impl NliProvider {
    pub fn validate(&self) -> Result<(), String> {
        match self.kind {
            NliKind::RemoteModel if self.endpoint.is_none() => Err("remote_model nli requires an endpoint".into()),
            NliKind::LlmPrompt if self.prompt_template_id.is_none() => {
                Err("llm_prompt nli requires prompt_template_id".into())
            }
            _ => Ok(()),
        }
    }

    pub fn build(
        &self,
        llm: Option<Arc<dyn LlmClient>>,
        templates: &TemplateRegistry,
    ) -> Result<Arc<dyn StanceClassifier>, String> {
        self.validate()?;
        Ok(match self.kind {
            NliKind::KeywordStub => Arc::new(KeywordStub),
            NliKind::RemoteModel => {
                let key = match &self.api_key_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| format!("environment variable {var} is not set"))?),
                    None => None,
                };
                let endpoint = JsonEndpoint::new(self.endpoint.as_deref().expect("validated"), Duration::from_millis(self.timeout_ms))
                    .map_err(|e| e.to_string())?
                    .with_bearer(key);
                Arc::new(RemoteNli { endpoint })
            }
            NliKind::LlmPrompt => {
                let id = self.prompt_template_id.as_deref().expect("validated");
                let template = templates.get(id).map_err(|e| e.to_string())?.clone();
                let llm = llm.ok_or("llm_prompt nli requires an llm provider")?;
                Arc::new(LlmNli { llm, template })
            }
        })
    }
}

#[async_trait]
pub trait StanceClassifier: Send + Sync {
    async fn stance(&self, claim: &str, evidence: &str, language: &LanguageTag) -> Result<StanceLabel, ProviderError>;

    fn fingerprint(&self) -> String;

    async fn healthy(&self) -> bool {
        true
    }
}

const NEGATIONS: &[&str] = &["not", "no", "never", "false"];

/// Keyword stance rules, in order: the snippet contains the claim verbatim
/// (Supports); a negation word sits next to a claim keyword (Refutes); at
/// least half the claim's content words appear (Supports); else Refutes.
pub fn keyword_stance(claim: &str, evidence: &str) -> StanceLabel {
    let claim_norm = tokens(claim).join(" ");
    let ev_tokens = tokens(evidence);
    let ev_norm = ev_tokens.join(" ");
    if !claim_norm.is_empty() && format!(" {ev_norm} ").contains(&format!(" {claim_norm} ")) {
        return StanceLabel::Supports;
    }
    let keywords = content_words(claim);
    let negated = ev_tokens.iter().enumerate().any(|(i, t)| {
        NEGATIONS.contains(&t.as_str())
            && [i.checked_sub(1), Some(i + 1)]
                .into_iter()
                .flatten()
                .filter_map(|j| ev_tokens.get(j))
                .any(|n| keywords.contains(n))
    });
    if negated {
        return StanceLabel::Refutes;
    }
    if keywords.is_empty() {
        return StanceLabel::Refutes;
    }
    let present: BTreeSet<&String> = ev_tokens.iter().filter(|t| keywords.contains(*t)).collect();
    if present.len() * 2 >= keywords.len() {
        StanceLabel::Supports
    } else {
        StanceLabel::Refutes
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KeywordStub;

#[async_trait]
impl StanceClassifier for KeywordStub {
    async fn stance(&self, claim: &str, evidence: &str, _: &LanguageTag) -> Result<StanceLabel, ProviderError> {
        Ok(keyword_stance(claim, evidence))
    }

    fn fingerprint(&self) -> String {
        fingerprint(["keyword-stub", "1"])
    }
}

#[derive(Serialize)]
struct NliRequest<'a> {
    claim: &'a str,
    evidence: &'a str,
    language: &'a str,
}

#[derive(Deserialize)]
struct NliResponse {
    stance: StanceLabel,
    #[allow(dead_code)]
    #[serde(default)]
    confidence: Option<f64>,
}

/// Wire: POST {"claim", "evidence", "language"} -> {"stance", "confidence"}.
pub struct RemoteNli {
    endpoint: JsonEndpoint,
}

impl RemoteNli {
    pub fn new(endpoint: JsonEndpoint) -> Self {
        Self { endpoint }
    }
}

#[async_trait]
impl StanceClassifier for RemoteNli {
    async fn stance(&self, claim: &str, evidence: &str, language: &LanguageTag) -> Result<StanceLabel, ProviderError> {
        let resp: NliResponse =
            self.endpoint.post(&NliRequest { claim, evidence, language: language.as_str() }).await?;
        Ok(resp.stance)
    }

    fn fingerprint(&self) -> String {
        fingerprint(["remote-nli", self.endpoint.url()])
    }

    async fn healthy(&self) -> bool {
        self.endpoint.probe().await
    }
}

pub struct LlmNli {
    llm: Arc<dyn LlmClient>,
    template: PromptTemplate,
}

fn parse_stance(raw: &str) -> Result<StanceLabel, ProviderError> {
    let words = tokens(raw);
    let sup = words.iter().position(|w| w.starts_with("support"));
    let refu = words.iter().position(|w| w.starts_with("refut"));
    match (sup, refu) {
        (Some(s), Some(r)) if s < r => Ok(StanceLabel::Supports),
        (Some(_), Some(_)) => Ok(StanceLabel::Refutes),
        (Some(_), None) => Ok(StanceLabel::Supports),
        (None, Some(_)) => Ok(StanceLabel::Refutes),
        (None, None) => Err(ProviderError::malformed(format!("no stance in {raw:?}"))),
    }
}

#[async_trait]
impl StanceClassifier for LlmNli {
    async fn stance(&self, claim: &str, evidence: &str, language: &LanguageTag) -> Result<StanceLabel, ProviderError> {
        let vars: BTreeMap<&'static str, String> = [
            ("claim", claim.to_string()),
            ("evidence", evidence.to_string()),
            ("language", language.to_string()),
        ]
        .into_iter()
        .collect();
        let prompt = self.template.render(&vars).map_err(ProviderError::malformed)?;
        let mut req = LlmRequest::new(LlmTask::Stance, prompt);
        req.vars = vars;
        parse_stance(&self.llm.generate(&req).await?)
    }

    fn fingerprint(&self) -> String {
        fingerprint([self.llm.fingerprint(), self.template.fingerprint()])
    }

    async fn healthy(&self) -> bool {
        self.llm.healthy().await
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerdictError {
    #[error("evidence item {0} has an empty snippet")]
    EmptySnippet(usize),
    #[error("verdict has no evidence to justify")]
    NoEvidence,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Set each item's stance with one provider call per item, up to
/// `concurrency` at a time. Items whose call fails keep no stance; if every
/// call fails the provider is reported unavailable.
pub async fn predict_stances(
    claim: &Claim,
    evidence: Vec<EvidenceItem>,
    provider: &dyn StanceClassifier,
    concurrency: usize,
) -> Result<Vec<EvidenceItem>, VerdictError> {
    if let Some(i) = evidence.iter().position(|e| e.snippet.trim().is_empty()) {
        return Err(VerdictError::EmptySnippet(i));
    }
    if evidence.is_empty() {
        return Ok(evidence);
    }
    let permits = Semaphore::new(concurrency.max(1));
    let calls: Vec<_> = evidence
        .iter()
        .map(|item| {
            let permits = &permits;
            async move {
                let _permit = permits.acquire().await.expect("semaphore is never closed");
                provider.stance(claim.text(), &item.snippet, claim.language()).await
            }
        })
        .collect();
    let results: Vec<Result<StanceLabel, ProviderError>> = join_all(calls).await;
    if results.iter().all(Result::is_err) {
        let first = results.into_iter().find_map(Result::err).expect("non-empty");
        return Err(VerdictError::Provider(first));
    }
    Ok(evidence
        .into_iter()
        .zip(results)
        .map(|(mut item, r)| {
            match r {
                Ok(stance) => item.stance = Some(stance),
                Err(e) => {
                    tracing::warn!(url = %item.url, error = %e, "stance prediction failed");
                    item.stance = None;
                }
            }
            item
        })
        .collect())
}

/// Sum similarities in a fixed order so the result is independent of
/// evidence order.
fn similarity_weight<'a>(items: impl Iterator<Item = &'a EvidenceItem>) -> f64 {
    let mut sims: Vec<f64> = items.map(|e| e.similarity.unwrap_or(0.0)).collect();
    sims.sort_by(f64::total_cmp);
    sims.into_iter().sum()
}

/// Majority vote over stance-bearing items. A tie goes to the side with the
/// larger total similarity; a tie there, or no votes at all, is Uncertain.
pub fn aggregate(claim: &Claim, evidence: Vec<EvidenceItem>) -> Verdict {
    let support = evidence.iter().filter(|e| e.stance == Some(StanceLabel::Supports)).count() as u32;
    let refute = evidence.iter().filter(|e| e.stance == Some(StanceLabel::Refutes)).count() as u32;
    let label = if support > refute {
        VerdictLabel::Supported
    } else if refute > support {
        VerdictLabel::Refuted
    } else if support == 0 {
        VerdictLabel::Uncertain
    } else {
        let ws = similarity_weight(evidence.iter().filter(|e| e.stance == Some(StanceLabel::Supports)));
        let wr = similarity_weight(evidence.iter().filter(|e| e.stance == Some(StanceLabel::Refutes)));
        match ws.total_cmp(&wr) {
            std::cmp::Ordering::Greater => VerdictLabel::Supported,
            std::cmp::Ordering::Less => VerdictLabel::Refuted,
            std::cmp::Ordering::Equal => VerdictLabel::Uncertain,
        }
    };
    Verdict {
        claim: claim.clone(),
        label,
        support_votes: support,
        refute_votes: refute,
        evidence,
        justification: None,
        correction: None,
        error: None,
    }
}

/// Top two snippets by similarity (ties in evidence order), joined and cut
/// to [`FALLBACK_JUSTIFICATION_CHARS`].
pub fn extractive_justification(evidence: &[EvidenceItem]) -> String {
    let mut order: Vec<usize> = (0..evidence.len()).collect();
    order.sort_by(|&a, &b| {
        let sa = evidence[a].similarity.unwrap_or(0.0);
        let sb = evidence[b].similarity.unwrap_or(0.0);
        sb.total_cmp(&sa).then(a.cmp(&b))
    });
    let joined = order
        .into_iter()
        .take(2)
        .map(|i| evidence[i].snippet.trim())
        .collect::<Vec<_>>()
        .join("\n\n");
    joined.chars().take(FALLBACK_JUSTIFICATION_CHARS).collect()
}

fn label_name(label: VerdictLabel) -> &'static str {
    match label {
        VerdictLabel::Supported => "supported",
        VerdictLabel::Refuted => "refuted",
        VerdictLabel::Uncertain => "uncertain",
    }
}

/// Summarize the evidence as a justification. Falls back to an extractive
/// summary if the model fails or returns nothing.
pub async fn justify(
    verdict: &Verdict,
    llm: &dyn LlmClient,
    provider: &LlmProvider,
    templates: &TemplateRegistry,
) -> Result<String, VerdictError> {
    if verdict.evidence.is_empty() {
        return Err(VerdictError::NoEvidence);
    }
    let listing = verdict
        .evidence
        .iter()
        .enumerate()
        .map(|(i, e)| format!("[{}] {} ({}): {}", i + 1, e.title, e.host(), e.snippet))
        .collect::<Vec<_>>()
        .join("\n");
    let vars: BTreeMap<&'static str, String> = [
        ("claim", verdict.claim.text().to_string()),
        ("verdict", label_name(verdict.label).to_string()),
        ("evidence", listing),
        ("language", verdict.claim.language().to_string()),
    ]
    .into_iter()
    .collect();
    let generated = match templates.get(JUSTIFICATION).and_then(|t| t.render(&vars)) {
        Ok(prompt) => {
            let mut req = LlmRequest::new(LlmTask::Justification, prompt);
            req.vars = vars;
            req.items = verdict.evidence.iter().map(|e| e.snippet.clone()).collect();
            req.temperature = provider.temperature;
            req.seed = provider.seed;
            llm.generate(&req).await.map_err(|e| e.to_string())
        }
        Err(e) => Err(e.to_string()),
    };
    match generated {
        Ok(text) if !text.trim().is_empty() => Ok(text.trim().to_string()),
        Ok(_) => Ok(extractive_justification(&verdict.evidence)),
        Err(e) => {
            tracing::warn!(error = %e, "justification generation failed; using extractive fallback");
            Ok(extractive_justification(&verdict.evidence))
        }
    }
}

/// Rewrite a refuted claim from its justification. Best effort: any
/// failure, or a non-refuted verdict, yields `None`.
pub async fn correct(
    verdict: &Verdict,
    llm: &dyn LlmClient,
    provider: &LlmProvider,
    templates: &TemplateRegistry,
) -> Option<String> {
    if verdict.label != VerdictLabel::Refuted {
        return None;
    }
    let vars: BTreeMap<&'static str, String> = [
        ("claim", verdict.claim.text().to_string()),
        ("justification", verdict.justification.clone().unwrap_or_default()),
        ("language", verdict.claim.language().to_string()),
    ]
    .into_iter()
    .collect();
    let prompt = templates.get(CORRECTION).ok()?.render(&vars).ok()?;
    let mut req = LlmRequest::new(LlmTask::Correction, prompt);
    req.vars = vars;
    req.temperature = provider.temperature;
    req.seed = provider.seed;
    match llm.generate(&req).await {
        Ok(text) if !text.trim().is_empty() => Some(text.trim().to_string()),
        Ok(_) => None,
        Err(e) => {
            tracing::warn!(error = %e, "correction generation failed");
            None
        }
    }
}
