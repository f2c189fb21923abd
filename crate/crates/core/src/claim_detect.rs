//! Check-worthiness classification behind a pluggable scorer.

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::llm::{LlmClient, LlmRequest, LlmTask};
use crate::model::{Claim, Sentence};
use crate::provider::{fingerprint, JsonEndpoint, ProviderError, DEFAULT_TIMEOUT};
use crate::templates::{PromptTemplate, TemplateRegistry};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    RemoteModel,
    LlmPrompt,
    HeuristicStub,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT.as_millis() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierProvider {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub prompt_template_id: Option<String>,
    #[serde(default = "default_threshold")]
    pub decision_threshold: f64,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl Default for ClassifierProvider {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::HeuristicStub,
            endpoint: None,
            prompt_template_id: None,
            decision_threshold: DEFAULT_THRESHOLD,
            api_key_env: None,
            timeout_ms: default_timeout_ms(),
        }
    }
}

impl ClassifierProvider {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return Err(format!("decision_threshold {} outside (0, 1)", self.decision_threshold));
        }
        match self.kind {
            ClassifierKind::RemoteModel if self.endpoint.is_none() => {
                Err("remote_model classifier requires an endpoint".into())
            }
            ClassifierKind::LlmPrompt if self.prompt_template_id.is_none() => {
                Err("llm_prompt classifier requires prompt_template_id".into())
            }
            _ => Ok(()),
        }
    }

    /// Instantiate the scorer. `llm` is required for the `LlmPrompt` kind.
    pub fn build(
        &self,
        llm: Option<Arc<dyn LlmClient>>,
        templates: &TemplateRegistry,
    ) -> Result<Arc<dyn SentenceScorer>, String> {
        self.validate()?;
        Ok(match self.kind {
            ClassifierKind::HeuristicStub => Arc::new(HeuristicScorer),
            ClassifierKind::RemoteModel => {
                let url = self.endpoint.as_deref().expect("validated");
                let key = match &self.api_key_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| format!("environment variable {var} is not set"))?),
                    None => None,
                };
                let endpoint = JsonEndpoint::new(url, Duration::from_millis(self.timeout_ms))
                    .map_err(|e| e.to_string())?
                    .with_bearer(key);
                Arc::new(RemoteScorer { endpoint })
            }
            ClassifierKind::LlmPrompt => {
                let id = self.prompt_template_id.as_deref().expect("validated");
                let template = templates.get(id).map_err(|e| e.to_string())?.clone();
                let llm = llm.ok_or("llm_prompt classifier requires an llm provider")?;
                Arc::new(LlmScorer { llm, template, temperature: crate::llm::DEFAULT_TEMPERATURE, seed: None })
            }
        })
    }
}

/// Produces one check-worthiness score in [0, 1] per sentence.
#[async_trait]
pub trait SentenceScorer: Send + Sync {
    async fn score(&self, sentences: &[Sentence]) -> Result<Vec<f64>, ProviderError>;

    fn fingerprint(&self) -> String;

    async fn healthy(&self) -> bool {
        true
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("sentence {0} has empty text")]
    EmptySentence(usize),
    #[error("batch_size must be at least 1")]
    InvalidBatchSize,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Score all sentences in a single provider call and label them.
pub async fn detect(
    sentences: &[Sentence],
    scorer: &dyn SentenceScorer,
    threshold: f64,
) -> Result<Vec<Claim>, DetectError> {
    if let Some(i) = sentences.iter().position(|s| s.text.trim().is_empty()) {
        return Err(DetectError::EmptySentence(i));
    }
    if sentences.is_empty() {
        return Ok(Vec::new());
    }
    let scores = scorer.score(sentences).await?;
    if scores.len() != sentences.len() {
        return Err(ProviderError::MalformedResponse(format!(
            "expected {} scores, got {}",
            sentences.len(),
            scores.len()
        ))
        .into());
    }
    if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(ProviderError::MalformedResponse(format!("score {bad} outside [0, 1]")).into());
    }
    Ok(sentences
        .iter()
        .zip(scores)
        .map(|(s, score)| Claim::new(s.clone(), score, threshold))
        .collect())
}

/// Like [`detect`], chunking provider calls into `batch_size` sentences.
/// Any failed batch fails the whole call.
pub async fn detect_batched(
    sentences: &[Sentence],
    scorer: &dyn SentenceScorer,
    threshold: f64,
    batch_size: usize,
) -> Result<Vec<Claim>, DetectError> {
    if batch_size == 0 {
        return Err(DetectError::InvalidBatchSize);
    }
    let mut out = Vec::with_capacity(sentences.len());
    for chunk in sentences.chunks(batch_size) {
        out.extend(detect(chunk, scorer, threshold).await?);
    }
    Ok(out)
}

const OPINION_MARKERS: &[&str] = &[
    "i think", "i believe", "i feel", "i guess", "i suppose", "i love", "i hate", "i like",
    "i wish", "in my opinion", "in my view", "personally", "we think", "we believe", "we feel",
];

const COMPARISON_WORDS: &[&str] = &[
    "more", "less", "fewer", "than", "most", "least", "largest", "smallest", "biggest",
    "highest", "lowest", "greater", "higher", "lower", "increased", "decreased", "doubled",
    "tripled", "halved", "majority", "record",
];

/// Deterministic check-worthiness score from surface cues: questions and
/// first-person opinions 0.1; digits, multiword proper names or comparisons
/// 0.9; anything else 0.4.
pub fn heuristic_score(text: &str) -> f64 {
    let t = text.trim();
    if t.ends_with(['?', '؟', '？']) {
        return 0.1;
    }
    let lower = t.to_lowercase();
    let is_opinion = OPINION_MARKERS.iter().any(|m| {
        lower.starts_with(m) && !lower[m.len()..].starts_with(|c: char| c.is_alphanumeric())
    });
    if is_opinion {
        return 0.1;
    }
    if t.chars().any(|c| c.is_numeric()) {
        return 0.9;
    }
    let words: Vec<&str> = t
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .collect();
    let capitalized = |w: &str| w.chars().next().is_some_and(char::is_uppercase);
    let proper_span = words.windows(2).skip(1).any(|p| capitalized(p[0]) && capitalized(p[1]));
    let comparison = words.iter().any(|w| COMPARISON_WORDS.contains(&w.to_lowercase().as_str()));
    if proper_span || comparison {
        return 0.9;
    }
    0.4
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicScorer;

#[async_trait]
impl SentenceScorer for HeuristicScorer {
    async fn score(&self, sentences: &[Sentence]) -> Result<Vec<f64>, ProviderError> {
        Ok(sentences.iter().map(|s| heuristic_score(&s.text)).collect())
    }

    fn fingerprint(&self) -> String {
        fingerprint(["heuristic-stub", "1"])
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    sentences: Vec<&'a str>,
    language: &'a str,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

/// Wire: POST {"sentences": [...], "language": tag} -> {"scores": [...]}.
pub struct RemoteScorer {
    endpoint: JsonEndpoint,
}

impl RemoteScorer {
    pub fn new(endpoint: JsonEndpoint) -> Self {
        Self { endpoint }
    }
}

#[async_trait]
impl SentenceScorer for RemoteScorer {
    async fn score(&self, sentences: &[Sentence]) -> Result<Vec<f64>, ProviderError> {
        let language = sentences.first().map(|s| s.language.as_str()).unwrap_or("und");
        let body = ScoreRequest { sentences: sentences.iter().map(|s| s.text.as_str()).collect(), language };
        let resp: ScoreResponse = self.endpoint.post(&body).await?;
        Ok(resp.scores)
    }

    fn fingerprint(&self) -> String {
        fingerprint(["remote-classifier", self.endpoint.url()])
    }

    async fn healthy(&self) -> bool {
        self.endpoint.probe().await
    }
}

/// Prompts an LLM for a strict JSON array of 0/1 labels.
pub struct LlmScorer {
    llm: Arc<dyn LlmClient>,
    template: PromptTemplate,
    temperature: f64,
    seed: Option<u64>,
}

impl LlmScorer {
    pub fn new(llm: Arc<dyn LlmClient>, template: PromptTemplate, temperature: f64, seed: Option<u64>) -> Self {
        Self { llm, template, temperature, seed }
    }
}

/// Parse a JSON array of 0/1 (numbers or booleans), tolerating code fences.
pub fn parse_label_array(raw: &str) -> Result<Vec<f64>, ProviderError> {
    let body = crate::query_gen::strip_code_fence(raw);
    let start = body.find('[').ok_or_else(|| ProviderError::malformed("no JSON array in output"))?;
    let end = body.rfind(']').ok_or_else(|| ProviderError::malformed("unterminated JSON array"))?;
    let values: Vec<serde_json::Value> =
        serde_json::from_str(&body[start..=end]).map_err(ProviderError::malformed)?;
    values
        .into_iter()
        .map(|v| match v {
            serde_json::Value::Bool(b) => Ok(if b { 1.0 } else { 0.0 }),
            serde_json::Value::Number(n) if n.as_f64() == Some(0.0) => Ok(0.0),
            serde_json::Value::Number(n) if n.as_f64() == Some(1.0) => Ok(1.0),
            other => Err(ProviderError::malformed(format!("label {other} is not 0 or 1"))),
        })
        .collect()
}

#[async_trait]
impl SentenceScorer for LlmScorer {
    async fn score(&self, sentences: &[Sentence]) -> Result<Vec<f64>, ProviderError> {
        let language = sentences.first().map(|s| s.language.to_string()).unwrap_or_default();
        let numbered: Vec<String> =
            sentences.iter().enumerate().map(|(i, s)| format!("{}. {}", i + 1, s.text)).collect();
        let vars = [("language", language), ("sentences", numbered.join("\n"))].into_iter().collect();
        let prompt = self.template.render(&vars).map_err(ProviderError::malformed)?;
        let mut req = LlmRequest::new(LlmTask::ClaimDetection, prompt);
        req.vars = vars;
        req.items = sentences.iter().map(|s| s.text.clone()).collect();
        req.temperature = self.temperature;
        req.seed = self.seed;
        let raw = self.llm.generate(&req).await?;
        parse_label_array(&raw)
    }

    fn fingerprint(&self) -> String {
        fingerprint([self.llm.fingerprint(), self.template.fingerprint()])
    }

    async fn healthy(&self) -> bool {
        self.llm.healthy().await
    }
}
