use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::provider::{fingerprint, JsonEndpoint, ProviderError, DEFAULT_TIMEOUT};

pub const LOCAL_STUB: &str = "local-stub";
pub const STUB_DIMENSION: usize = 64;

fn default_dimension() -> usize {
    STUB_DIMENSION
}

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT.as_millis() as u64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingProvider {
    /// A URL, or `"local-stub"`.
    pub endpoint: String,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl Default for EmbeddingProvider {
    fn default() -> Self {
        Self {
            endpoint: LOCAL_STUB.into(),
            dimension: STUB_DIMENSION,
            api_key_env: None,
            timeout_ms: default_timeout_ms(),
        }
    }
}

impl EmbeddingProvider {
    pub fn connect(&self) -> Result<Box<dyn Embedder>, ProviderError> {
        if self.dimension == 0 {
            return Err(ProviderError::malformed("embedding dimension must be positive"));
        }
        if self.endpoint == LOCAL_STUB {
            return Ok(Box::new(LocalStubEmbedder::new(self.dimension)));
        }
        let key = match &self.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                ProviderError::Unavailable(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let endpoint =
            JsonEndpoint::new(&self.endpoint, Duration::from_millis(self.timeout_ms))?.with_bearer(key);
        Ok(Box::new(HttpEmbedder { endpoint, dimension: self.dimension }))
    }
}

#[async_trait]
pub trait Embedder: Send + Sync {
    async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;

    fn dimension(&self) -> usize;

    /// Whether this is the offline hashing embedder, which switches
    /// near-duplicate detection to character n-gram Jaccard.
    fn is_local_stub(&self) -> bool {
        false
    }

    fn fingerprint(&self) -> String;

    async fn healthy(&self) -> bool {
        true
    }
}

/// Cosine similarity in [-1, 1]; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Lowercased character 3-grams; strings shorter than three characters
/// yield themselves as their only gram.
pub fn char_trigrams(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.trim().to_lowercase().chars().collect();
    match chars.len() {
        0 => Vec::new(),
        1 | 2 => vec![chars.iter().collect()],
        _ => chars.windows(3).map(|w| w.iter().collect()).collect(),
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x100_0000_01b3))
}

/// Offline embedder: hashed bag of character 3-grams, L2-normalized.
#[derive(Debug, Clone, Copy)]
pub struct LocalStubEmbedder {
    dimension: usize,
}

impl Default for LocalStubEmbedder {
    fn default() -> Self {
        Self { dimension: STUB_DIMENSION }
    }
}

impl LocalStubEmbedder {
    pub fn new(dimension: usize) -> Self {
        Self { dimension: dimension.max(1) }
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        for gram in char_trigrams(text) {
            v[(fnv1a(gram.as_bytes()) % self.dimension as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

#[async_trait]
impl Embedder for LocalStubEmbedder {
    async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn is_local_stub(&self) -> bool {
        true
    }

    fn fingerprint(&self) -> String {
        fingerprint([LOCAL_STUB.as_bytes(), &self.dimension.to_le_bytes()])
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

/// Wire: POST {"texts": [...]} -> {"embeddings": [[...], ...]}.
pub struct HttpEmbedder {
    endpoint: JsonEndpoint,
    dimension: usize,
}

impl HttpEmbedder {
    pub fn new(endpoint: JsonEndpoint, dimension: usize) -> Self {
        Self { endpoint, dimension }
    }
}

#[async_trait]
impl Embedder for HttpEmbedder {
    async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let resp: EmbedResponse = self.endpoint.post(&EmbedRequest { texts }).await?;
        if resp.embeddings.len() != texts.len() {
            return Err(ProviderError::malformed(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                resp.embeddings.len()
            )));
        }
        if let Some(v) = resp.embeddings.iter().find(|v| v.len() != self.dimension) {
            return Err(ProviderError::malformed(format!(
                "embedding of dimension {} (expected {})",
                v.len(),
                self.dimension
            )));
        }
        Ok(resp.embeddings)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn fingerprint(&self) -> String {
        fingerprint([self.endpoint.url().as_bytes(), &self.dimension.to_le_bytes()])
    }

    async fn healthy(&self) -> bool {
        self.endpoint.probe().await
    }
}
