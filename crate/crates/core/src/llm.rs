//! Generative model access: a request type, a client trait, an HTTP client
//! and a deterministic stub.

use std::collections::BTreeMap;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::provider::{fingerprint, JsonEndpoint, ProviderError, DEFAULT_TIMEOUT};

/// Endpoint value that selects the deterministic stub.
pub const STUB_ENDPOINT: &str = "stub";

pub const DEFAULT_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_MAX_QUESTIONS: usize = 3;

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

fn default_max_questions() -> usize {
    DEFAULT_MAX_QUESTIONS
}

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT.as_millis() as u64
}

/// Descriptor of an LLM backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmProvider {
    pub name: String,
    pub endpoint: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_max_questions")]
    pub max_questions: usize,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl LlmProvider {
    pub fn stub() -> Self {
        Self {
            name: "stub".into(),
            endpoint: STUB_ENDPOINT.into(),
            temperature: DEFAULT_TEMPERATURE,
            seed: None,
            max_questions: DEFAULT_MAX_QUESTIONS,
            api_key_env: None,
            timeout_ms: default_timeout_ms(),
        }
    }

    pub fn is_stub(&self) -> bool {
        self.endpoint == STUB_ENDPOINT
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(format!("llm {}: temperature must be >= 0", self.name));
        }
        if self.max_questions == 0 {
            return Err(format!("llm {}: max_questions must be >= 1", self.name));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        fingerprint([
            self.name.as_bytes(),
            self.endpoint.as_bytes(),
            &self.temperature.to_le_bytes(),
            format!("{:?}", self.seed).as_bytes(),
        ])
    }

    /// Build a client for this descriptor.
    pub fn connect(&self) -> Result<Box<dyn LlmClient>, ProviderError> {
        if self.is_stub() {
            return Ok(Box::new(StubLlm));
        }
        let key = match &self.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                ProviderError::Unavailable(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let endpoint = JsonEndpoint::new(&self.endpoint, Duration::from_millis(self.timeout_ms))?
            .with_bearer(key);
        Ok(Box::new(HttpLlm { endpoint, model: self.name.clone() }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmTask {
    ClaimDetection,
    QuestionGeneration,
    Stance,
    Justification,
    Correction,
}

/// A rendered prompt plus the structured inputs it was rendered from.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub task: LlmTask,
    pub prompt: String,
    pub vars: BTreeMap<&'static str, String>,
    /// List-valued input: sentences for detection, snippets for justification.
    pub items: Vec<String>,
    pub temperature: f64,
    pub seed: Option<u64>,
}

impl LlmRequest {
    pub fn new(task: LlmTask, prompt: String) -> Self {
        Self {
            task,
            prompt,
            vars: BTreeMap::new(),
            items: Vec::new(),
            temperature: DEFAULT_TEMPERATURE,
            seed: None,
        }
    }

    pub fn var(&self, name: &str) -> &str {
        self.vars.get(name).map(String::as_str).unwrap_or("")
    }
}

#[async_trait]
pub trait LlmClient: Send + Sync {
    async fn generate(&self, request: &LlmRequest) -> Result<String, ProviderError>;

    fn fingerprint(&self) -> String;

    async fn healthy(&self) -> bool {
        true
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

/// Wire: POST {"model","prompt","temperature","seed"} -> {"text"}.
pub struct HttpLlm {
    endpoint: JsonEndpoint,
    model: String,
}

#[async_trait]
impl LlmClient for HttpLlm {
    async fn generate(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        let body = GenerateRequest {
            model: &self.model,
            prompt: &request.prompt,
            temperature: request.temperature,
            seed: request.seed,
        };
        let resp: GenerateResponse = self.endpoint.post(&body).await?;
        Ok(resp.text)
    }

    fn fingerprint(&self) -> String {
        fingerprint(["http", self.model.as_str(), self.endpoint.url()])
    }

    async fn healthy(&self) -> bool {
        self.endpoint.probe().await
    }
}

/// Deterministic stand-in for a generative model; output depends only on
/// the request's structured inputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubLlm;

impl StubLlm {
    /// One templated question: "Who" followed by the claim minus its first word.
    pub fn question_for(claim: &str) -> String {
        let body = claim.trim().trim_end_matches(['.', '!', '?', '。', '।']);
        match body.split_once(char::is_whitespace) {
            Some((_, rest)) if !rest.trim().is_empty() => format!("Who {}?", rest.trim()),
            _ => format!("What about {body}?"),
        }
    }
}

#[async_trait]
impl LlmClient for StubLlm {
    async fn generate(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        let out = match request.task {
            LlmTask::ClaimDetection => {
                let labels: Vec<u8> = request
                    .items
                    .iter()
                    .map(|s| u8::from(crate::claim_detect::heuristic_score(s) >= 0.5))
                    .collect();
                serde_json::to_string(&labels).expect("serializable")
            }
            LlmTask::QuestionGeneration => {
                serde_json::to_string(&[Self::question_for(request.var("claim"))]).expect("serializable")
            }
            LlmTask::Stance => {
                match crate::verdict::keyword_stance(request.var("claim"), request.var("evidence")) {
                    crate::model::StanceLabel::Supports => "supports".into(),
                    crate::model::StanceLabel::Refutes => "refutes".into(),
                }
            }
            LlmTask::Justification => request.items.first().cloned().unwrap_or_default(),
            LlmTask::Correction => format!("Correction: {}", request.var("justification")),
        };
        Ok(out)
    }

    fn fingerprint(&self) -> String {
        fingerprint(["stub-llm", "1"])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_question_template() {
        assert_eq!(StubLlm::question_for("X won the 2020 election"), "Who won the 2020 election?");
        assert_eq!(StubLlm::question_for("Vaccines."), "What about Vaccines?");
    }

    #[tokio::test]
    async fn stub_correction_contract() {
        let mut req = LlmRequest::new(LlmTask::Correction, String::new());
        req.vars.insert("justification", "It was 1889.".into());
        assert_eq!(StubLlm.generate(&req).await.unwrap(), "Correction: It was 1889.");
    }

    #[test]
    fn provider_defaults_from_toml() {
        let p: LlmProvider = toml::from_str("name = \"m\"\nendpoint = \"stub\"").unwrap();
        assert_eq!(p.temperature, 0.2);
        assert_eq!(p.max_questions, 3);
        assert_eq!(p.seed, None);
        assert!(p.validate().is_ok());
        let bad = LlmProvider { max_questions: 0, ..p };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn missing_api_key_env_fails_connect() {
        let p = LlmProvider {
            endpoint: "http://127.0.0.1:9/".into(),
            api_key_env: Some("FACTCHECK_TEST_SURELY_UNSET".into()),
            ..LlmProvider::stub()
        };
        assert!(p.connect().is_err());
    }
}
